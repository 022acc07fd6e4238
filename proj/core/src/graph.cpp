#include "pact/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pact/csvio.hpp"
#include "pact/errors.hpp"

#if defined(PACT_HAVE_ZLIB)
#include <zlib.h>
#endif

namespace pact {

namespace {

// Absolute plus relative slop so exact lattice multiples survive the
// round-trip through division even at indices in the tens of thousands.
double grid_slop(double x) {
    return 1e-9 + 1e-10 * std::abs(x);
}

constexpr int kEpochBits = 14;
constexpr int kModelBits = 6;
constexpr int kNodesBits = 6;
constexpr int kLossBits = 18;
constexpr int kTimeBits = 20;

void check_range(int value, int bits, const char* field) {
    if (value < 0 || value >= (1 << bits)) {
        throw RuntimeError(std::string("vertex field ") + field + " value " +
                           std::to_string(value) + " exceeds the representable lattice (" +
                           std::to_string(bits) + " bits)");
    }
}

}  // namespace

int quantize_up_index(double value, double resolution) {
    double x = value / resolution;
    return static_cast<int>(std::ceil(x - grid_slop(x)));
}

int quantize_down_index(double value, double resolution) {
    double x = value / resolution;
    return static_cast<int>(std::floor(x + grid_slop(x)));
}

double quantize_up(double value, double resolution) {
    return quantize_up_index(value, resolution) * resolution;
}

std::uint64_t pack_vertex(const VertexKey& key) {
    check_range(key.epoch, kEpochBits, "epoch");
    check_range(key.model_idx, kModelBits, "model");
    check_range(key.nodes_idx, kNodesBits, "nodes");
    check_range(key.loss_idx, kLossBits, "loss");
    check_range(key.time_idx, kTimeBits, "time");
    std::uint64_t packed = static_cast<std::uint64_t>(key.epoch);
    packed = (packed << kModelBits) | static_cast<std::uint64_t>(key.model_idx);
    packed = (packed << kNodesBits) | static_cast<std::uint64_t>(key.nodes_idx);
    packed = (packed << kLossBits) | static_cast<std::uint64_t>(key.loss_idx);
    packed = (packed << kTimeBits) | static_cast<std::uint64_t>(key.time_idx);
    return packed;
}

VertexKey unpack_vertex(std::uint64_t packed) {
    VertexKey key;
    key.time_idx = static_cast<int>(packed & ((1u << kTimeBits) - 1));
    packed >>= kTimeBits;
    key.loss_idx = static_cast<int>(packed & ((1u << kLossBits) - 1));
    packed >>= kLossBits;
    key.nodes_idx = static_cast<int>(packed & ((1u << kNodesBits) - 1));
    packed >>= kNodesBits;
    key.model_idx = static_cast<int>(packed & ((1u << kModelBits) - 1));
    packed >>= kModelBits;
    key.epoch = static_cast<int>(packed);
    return key;
}

double ForecastCache::expected_run(int model_idx, int nodes_idx, int rel_epoch) const {
    int pair = model_idx * num_nodes + nodes_idx;
    if (!run_valid[pair]) {
        throw RuntimeError("no cached run forecast for pair index " + std::to_string(pair));
    }
    const Forecast& f = run[pair];
    return f.expected[std::min(rel_epoch, f.horizon - 1)];
}

double ForecastCache::robust_run(int model_idx, int nodes_idx, int rel_epoch) const {
    int pair = model_idx * num_nodes + nodes_idx;
    if (!run_valid[pair]) {
        throw RuntimeError("no cached run forecast for pair index " + std::to_string(pair));
    }
    const Forecast& f = run[pair];
    return f.q_high[std::min(rel_epoch, f.horizon - 1)];
}

double ForecastCache::expected_change(int from_idx, int to_idx) const {
    if (from_idx == to_idx) {
        return 0.0;
    }
    int pair = from_idx * num_models + to_idx;
    if (!change_valid[pair]) {
        throw RuntimeError("no cached change forecast for model indices " +
                           std::to_string(from_idx) + " -> " + std::to_string(to_idx));
    }
    return change[pair].expected[0];
}

double ForecastCache::robust_change(int from_idx, int to_idx) const {
    if (from_idx == to_idx) {
        return 0.0;
    }
    int pair = from_idx * num_models + to_idx;
    if (!change_valid[pair]) {
        throw RuntimeError("no cached change forecast for model indices " +
                           std::to_string(from_idx) + " -> " + std::to_string(to_idx));
    }
    return change[pair].q_high[0];
}

double ExpandedGraph::edge_expected_dloss(std::uint32_t from, const EdgeOut& e) const {
    VertexKey a = vertex(from);
    VertexKey b = vertex(e.to);
    return cache.expected_change(a.model_idx, b.model_idx) +
           cache.expected_run(b.model_idx, b.nodes_idx, a.epoch);
}

double ExpandedGraph::edge_robust_dloss(std::uint32_t from, const EdgeOut& e) const {
    VertexKey a = vertex(from);
    VertexKey b = vertex(e.to);
    return cache.robust_change(a.model_idx, b.model_idx) +
           cache.robust_run(b.model_idx, b.nodes_idx, a.epoch);
}

std::size_t expected_grid_vertex_count(const Scenario& s) {
    std::size_t models = s.models.size();
    std::size_t nodes = s.node_sets.size();
    std::size_t epochs =
        static_cast<std::size_t>(quantize_up_index(s.constraints.time_limit, s.quantization.gamma_time));
    std::size_t loss_rows = static_cast<std::size_t>(
        quantize_down_index(s.constraints.initial_loss, s.quantization.gamma_loss) + 1);
    std::size_t time_cols = static_cast<std::size_t>(
        quantize_down_index(s.constraints.time_limit, s.quantization.gamma_time) + 1);
    return models * nodes * epochs * loss_rows * time_cols;
}

namespace {

// Flattened action-edge template shared by every vertex holding the same
// (model, nodes) pair.
struct ActionEdge {
    int to_model_idx = 0;
    int to_nodes_idx = 0;
    int dt_idx = 0;       // quantized time advance
    double energy = 0.0;
};

struct BuildTables {
    int num_models = 0;
    int num_nodes = 0;
    std::vector<std::vector<ActionEdge>> actions_from;  // indexed by from-pair
    std::vector<char> runnable;                         // indexed by pair
};

BuildTables make_tables(const Scenario& s) {
    BuildTables t;
    t.num_models = static_cast<int>(s.models.size());
    t.num_nodes = static_cast<int>(s.node_sets.size());
    int pairs = t.num_models * t.num_nodes;
    t.actions_from.resize(pairs);
    t.runnable.assign(pairs, 0);
    for (int mi = 0; mi < t.num_models; ++mi) {
        for (int ni = 0; ni < t.num_nodes; ++ni) {
            if (s.run_cost(s.models[mi].id, s.node_sets[ni].id)) {
                t.runnable[mi * t.num_nodes + ni] = 1;
            }
        }
    }
    for (int fm = 0; fm < t.num_models; ++fm) {
        for (int fn = 0; fn < t.num_nodes; ++fn) {
            auto& list = t.actions_from[fm * t.num_nodes + fn];
            State from{};
            from.model = s.models[fm].id;
            from.nodes = s.node_sets[fn].id;
            for (int tm = 0; tm < t.num_models; ++tm) {
                for (int tn = 0; tn < t.num_nodes; ++tn) {
                    Action a{s.models[tm].id, s.node_sets[tn].id};
                    auto cost = step_cost(s, from, a);
                    if (!cost) {
                        continue;
                    }
                    ActionEdge edge;
                    edge.to_model_idx = tm;
                    edge.to_nodes_idx = tn;
                    edge.dt_idx = quantize_up_index(cost->delta_time, s.quantization.gamma_time);
                    edge.energy = cost->delta_energy;
                    list.push_back(edge);
                }
            }
        }
    }
    return t;
}

ForecastCache make_cache(const Scenario& s, Estimator& estimator, const LossHistory& history,
                         const BuildTables& t, int horizon, int origin_epoch) {
    ForecastCache cache;
    cache.horizon = horizon;
    cache.num_models = t.num_models;
    cache.num_nodes = t.num_nodes;
    cache.run.resize(t.num_models * t.num_nodes);
    cache.run_valid.assign(t.num_models * t.num_nodes, 0);
    cache.change.resize(t.num_models * t.num_models);
    cache.change_valid.assign(t.num_models * t.num_models, 0);

    for (int mi = 0; mi < t.num_models; ++mi) {
        for (int ni = 0; ni < t.num_nodes; ++ni) {
            int pair = mi * t.num_nodes + ni;
            if (!t.runnable[pair]) {
                continue;
            }
            try {
                cache.run[pair] =
                    estimator.forecast_run(history, s.models[mi].id, s.node_sets[ni].id, horizon);
            } catch (const std::exception& e) {
                throw RuntimeError("run estimator failed at epoch " +
                                   std::to_string(origin_epoch) + ", model " +
                                   std::to_string(s.models[mi].id) + ", nodes " +
                                   std::to_string(s.node_sets[ni].id) + ": " + e.what());
            }
            const Forecast& f = cache.run[pair];
            if (f.horizon < 1 || static_cast<int>(f.expected.size()) != f.horizon ||
                static_cast<int>(f.q_high.size()) != f.horizon) {
                throw RuntimeError("run estimator returned a malformed forecast for model " +
                                   std::to_string(s.models[mi].id) + ", nodes " +
                                   std::to_string(s.node_sets[ni].id));
            }
            cache.run_valid[pair] = 1;
        }
    }

    // One change forecast per model pair that any feasible action can use.
    std::vector<char> needed(t.num_models * t.num_models, 0);
    for (int fp = 0; fp < t.num_models * t.num_nodes; ++fp) {
        int fm = fp / t.num_nodes;
        for (const ActionEdge& e : t.actions_from[fp]) {
            if (e.to_model_idx != fm) {
                needed[fm * t.num_models + e.to_model_idx] = 1;
            }
        }
    }
    for (int fm = 0; fm < t.num_models; ++fm) {
        for (int tm = 0; tm < t.num_models; ++tm) {
            if (!needed[fm * t.num_models + tm]) {
                continue;
            }
            try {
                cache.change[fm * t.num_models + tm] =
                    estimator.forecast_change(history, s.models[fm].id, s.models[tm].id);
            } catch (const std::exception& e) {
                throw RuntimeError("change estimator failed at epoch " +
                                   std::to_string(origin_epoch) + " for models " +
                                   std::to_string(s.models[fm].id) + " -> " +
                                   std::to_string(s.models[tm].id) + ": " + e.what());
            }
            const Forecast& f = cache.change[fm * t.num_models + tm];
            if (f.horizon < 1 || f.expected.empty() || f.q_high.empty()) {
                throw RuntimeError("change estimator returned a malformed forecast for models " +
                                   std::to_string(s.models[fm].id) + " -> " +
                                   std::to_string(s.models[tm].id));
            }
            cache.change_valid[fm * t.num_models + tm] = 1;
        }
    }
    return cache;
}

}  // namespace

ExpandedGraph build_graph(const Scenario& s, Estimator& estimator, const LossHistory& history,
                          const State& origin, const GraphBuildOptions& options) {
    if (history.empty()) {
        throw RuntimeError("build_graph requires a loss history ending at the origin epoch");
    }
    if (history.back().epoch != origin.epoch) {
        throw RuntimeError("history ends at epoch " + std::to_string(history.back().epoch) +
                           " but the origin is at epoch " + std::to_string(origin.epoch));
    }
    BuildTables tables = make_tables(s);

    ExpandedGraph g;
    g.quant = s.quantization;
    for (const auto& m : s.models) {
        g.model_ids.push_back(m.id);
    }
    for (const auto& n : s.node_sets) {
        g.node_ids.push_back(n.id);
    }
    g.initial_loss = s.constraints.initial_loss;
    g.loss_target = s.constraints.loss_target;
    g.time_limit = s.constraints.time_limit;
    g.kmax = quantize_up_index(s.constraints.time_limit, s.quantization.gamma_time);
    g.loss_top_idx = quantize_down_index(s.constraints.initial_loss, s.quantization.gamma_loss);
    g.feasible_loss_idx = quantize_down_index(s.constraints.loss_target, s.quantization.gamma_loss);
    g.feasible_time_idx = quantize_down_index(s.constraints.time_limit, s.quantization.gamma_time);
    g.origin_epoch_abs = origin.epoch;
    g.full_grid = options.full_grid;
    g.cache = make_cache(s, estimator, history, tables, options.horizon, origin.epoch);

    int origin_model_idx = s.model_index(origin.model);
    int origin_nodes_idx = s.nodes_index(origin.nodes);
    if (origin_model_idx < 0 || origin_nodes_idx < 0) {
        throw RuntimeError("origin references an unknown model or node-set id");
    }
    VertexKey origin_key;
    origin_key.epoch = 0;
    origin_key.model_idx = origin_model_idx;
    origin_key.nodes_idx = origin_nodes_idx;
    origin_key.loss_idx = quantize_up_index(origin.loss, s.quantization.gamma_loss);
    origin_key.time_idx = quantize_up_index(origin.elapsed, s.quantization.gamma_time);

    const int num_models = tables.num_models;
    const int num_nodes = tables.num_nodes;
    const double gamma_loss = s.quantization.gamma_loss;

    if (options.full_grid) {
        const std::size_t loss_rows = static_cast<std::size_t>(g.loss_top_idx) + 1;
        const std::size_t time_cols = static_cast<std::size_t>(g.feasible_time_idx) + 1;
        const std::size_t per_epoch =
            static_cast<std::size_t>(num_models) * num_nodes * loss_rows * time_cols;
        const std::size_t total = 1 + per_epoch * static_cast<std::size_t>(g.kmax);

        g.keys.reserve(total);
        g.index_of.reserve(total);
        g.keys.push_back(pack_vertex(origin_key));
        g.index_of.emplace(g.keys[0], 0);
        for (int k = 1; k <= g.kmax; ++k) {
            for (int mi = 0; mi < num_models; ++mi) {
                for (int ni = 0; ni < num_nodes; ++ni) {
                    for (int li = 0; li <= g.loss_top_idx; ++li) {
                        for (int ti = 0; ti <= g.feasible_time_idx; ++ti) {
                            VertexKey key{k, mi, ni, li, ti};
                            std::uint64_t packed = pack_vertex(key);
                            // The origin key has epoch 0, so grid keys never
                            // collide with it.
                            g.index_of.emplace(packed, static_cast<std::uint32_t>(g.keys.size()));
                            g.keys.push_back(packed);
                        }
                    }
                }
            }
        }

        // Grid index arithmetic mirrors the enumeration order above.
        auto grid_index = [&](int k, int mi, int ni, int li, int ti) -> std::uint32_t {
            std::size_t idx = static_cast<std::size_t>(k - 1) * per_epoch;
            idx += ((static_cast<std::size_t>(mi) * num_nodes + ni) * loss_rows + li) * time_cols +
                   ti;
            return static_cast<std::uint32_t>(1 + idx);
        };

        g.edge_offset.reserve(total + 1);
        g.edge_offset.push_back(0);
        for (std::uint32_t v = 0; v < g.keys.size(); ++v) {
            VertexKey key = unpack_vertex(g.keys[v]);
            if (key.epoch < g.kmax) {
                int pair = key.model_idx * num_nodes + key.nodes_idx;
                for (const ActionEdge& a : tables.actions_from[pair]) {
                    int new_t = key.time_idx + a.dt_idx;
                    if (new_t > g.feasible_time_idx) {
                        continue;
                    }
                    double robust = g.cache.robust_change(key.model_idx, a.to_model_idx) +
                                    g.cache.robust_run(a.to_model_idx, a.to_nodes_idx, key.epoch);
                    int new_l = quantize_up_index(key.loss_idx * gamma_loss + robust, gamma_loss);
                    new_l = std::clamp(new_l, 0, g.loss_top_idx);
                    EdgeOut e;
                    e.to = grid_index(key.epoch + 1, a.to_model_idx, a.to_nodes_idx, new_l, new_t);
                    e.weight = a.energy;
                    g.edges.push_back(e);
                }
            }
            g.edge_offset.push_back(static_cast<std::uint32_t>(g.edges.size()));
        }
    } else {
        int epoch_cap = options.lookahead > 0 ? std::min(options.lookahead, g.kmax) : g.kmax;

        // Largest robust per-epoch loss decrease still achievable from each
        // relative epoch onward; states that cannot close the gap to the
        // target with it can never reach a feasible vertex.
        std::vector<double> suffix_drop;
        if (options.prune_hopeless) {
            std::vector<double> max_drop(epoch_cap, 0.0);
            for (int k = 0; k < epoch_cap; ++k) {
                for (int pair = 0; pair < num_models * num_nodes; ++pair) {
                    if (!tables.runnable[pair]) {
                        continue;
                    }
                    double robust = g.cache.robust_run(pair / num_nodes, pair % num_nodes, k);
                    max_drop[k] = std::max(max_drop[k], -robust);
                }
            }
            suffix_drop.assign(epoch_cap + 1, 0.0);
            for (int k = epoch_cap - 1; k >= 0; --k) {
                suffix_drop[k] = suffix_drop[k + 1] + max_drop[k];
            }
        }
        double target_loss = g.feasible_loss_idx * gamma_loss;

        g.keys.push_back(pack_vertex(origin_key));
        g.index_of.emplace(g.keys[0], 0);
        g.edge_offset.push_back(0);
        for (std::uint32_t v = 0; v < g.keys.size(); ++v) {
            VertexKey key = unpack_vertex(g.keys[v]);
            if (key.epoch < epoch_cap) {
                int pair = key.model_idx * num_nodes + key.nodes_idx;
                for (const ActionEdge& a : tables.actions_from[pair]) {
                    int new_t = key.time_idx + a.dt_idx;
                    if (new_t > g.feasible_time_idx) {
                        continue;
                    }
                    double robust = g.cache.robust_change(key.model_idx, a.to_model_idx) +
                                    g.cache.robust_run(a.to_model_idx, a.to_nodes_idx, key.epoch);
                    int new_l = quantize_up_index(key.loss_idx * gamma_loss + robust, gamma_loss);
                    new_l = std::clamp(new_l, 0, g.loss_top_idx);
                    if (options.prune_hopeless &&
                        new_l * gamma_loss - suffix_drop[key.epoch + 1] >
                            target_loss + grid_slop(target_loss)) {
                        continue;
                    }
                    VertexKey to_key{key.epoch + 1, a.to_model_idx, a.to_nodes_idx, new_l, new_t};
                    std::uint64_t packed = pack_vertex(to_key);
                    auto [it, inserted] =
                        g.index_of.emplace(packed, static_cast<std::uint32_t>(g.keys.size()));
                    if (inserted) {
                        g.keys.push_back(packed);
                    }
                    EdgeOut e;
                    e.to = it->second;
                    e.weight = a.energy;
                    g.edges.push_back(e);
                }
            }
            g.edge_offset.push_back(static_cast<std::uint32_t>(g.edges.size()));
        }
    }

    g.feasible.assign(g.keys.size(), 0);
    for (std::uint32_t v = 0; v < g.keys.size(); ++v) {
        VertexKey key = unpack_vertex(g.keys[v]);
        if (key.loss_idx <= g.feasible_loss_idx && key.time_idx <= g.feasible_time_idx) {
            g.feasible[v] = 1;
        }
    }
    return g;
}

namespace {

std::string vertex_name(const VertexKey& key) {
    std::ostringstream name;
    name << "v" << key.epoch << "_" << key.model_idx << "_" << key.nodes_idx << "_"
         << key.loss_idx << "_" << key.time_idx;
    return name.str();
}

const char* edge_category(const VertexKey& a, const VertexKey& b) {
    bool model_change = a.model_idx != b.model_idx;
    bool nodes_change = a.nodes_idx != b.nodes_idx;
    if (model_change && nodes_change) {
        return "both";
    }
    if (model_change) {
        return "model_only";
    }
    if (nodes_change) {
        return "node_only";
    }
    return "neither";
}

const char* edge_style(const char* category) {
    if (std::string(category) == "both") {
        return "color=orange, style=dashed";
    }
    if (std::string(category) == "model_only") {
        return "color=purple";
    }
    if (std::string(category) == "node_only") {
        return "color=green";
    }
    return "color=black";
}

std::vector<char> reachable_mask(const ExpandedGraph& g) {
    std::vector<char> mask(g.vertex_count(), 0);
    std::vector<std::uint32_t> stack{ExpandedGraph::kOrigin};
    mask[ExpandedGraph::kOrigin] = 1;
    while (!stack.empty()) {
        std::uint32_t v = stack.back();
        stack.pop_back();
        for (const EdgeOut* e = g.edges_begin(v); e != g.edges_end(v); ++e) {
            if (!mask[e->to]) {
                mask[e->to] = 1;
                stack.push_back(e->to);
            }
        }
    }
    return mask;
}

}  // namespace

std::string export_dot(const ExpandedGraph& g, bool reachable_only) {
    std::vector<char> mask;
    if (reachable_only) {
        mask = reachable_mask(g);
    }
    auto included = [&](std::uint32_t v) { return !reachable_only || mask[v]; };

    std::ostringstream out;
    out << "digraph expanded_state_graph {\n";
    out << "  rankdir=LR;\n";
    out << "  omega [shape=doublecircle, label=\"omega\"];\n";
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        if (!included(v)) {
            continue;
        }
        VertexKey key = g.vertex(v);
        out << "  " << vertex_name(key) << " [label=\"k=" << key.epoch << " m="
            << g.model_ids[key.model_idx] << " n=" << g.node_ids[key.nodes_idx] << " l="
            << format_double(key.loss_idx * g.quant.gamma_loss) << " T="
            << format_double(key.time_idx * g.quant.gamma_time) << "\"";
        if (v == ExpandedGraph::kOrigin) {
            out << ", shape=box";
        }
        out << "];\n";
    }
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        if (!included(v)) {
            continue;
        }
        VertexKey from = g.vertex(v);
        for (const EdgeOut* e = g.edges_begin(v); e != g.edges_end(v); ++e) {
            VertexKey to = g.vertex(e->to);
            const char* category = edge_category(from, to);
            out << "  " << vertex_name(from) << " -> " << vertex_name(to) << " [weight_energy=\""
                << format_double(e->weight) << "\", category=\"" << category << "\", "
                << edge_style(category) << "];\n";
        }
        if (g.feasible[v]) {
            out << "  " << vertex_name(from) << " -> omega [weight_energy=\"0\", "
                << "category=\"sink\", color=gray, style=dotted];\n";
        }
    }
    out << "}\n";
    return out.str();
}

void dump_adjacency(const ExpandedGraph& g, const std::string& path) {
    std::ostringstream out;
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        VertexKey from = g.vertex(v);
        for (const EdgeOut* e = g.edges_begin(v); e != g.edges_end(v); ++e) {
            out << vertex_name(from) << " -> " << vertex_name(g.vertex(e->to)) << " "
                << format_double(e->weight) << "\n";
        }
        if (g.feasible[v]) {
            out << vertex_name(from) << " -> omega 0\n";
        }
    }
    std::string content = out.str();

    bool want_gzip = path.size() > 3 && path.substr(path.size() - 3) == ".gz";
    if (want_gzip) {
#if defined(PACT_HAVE_ZLIB)
        gzFile file = gzopen(path.c_str(), "wb");
        if (!file) {
            throw RuntimeError("cannot open for writing: " + path);
        }
        int written = gzwrite(file, content.data(), static_cast<unsigned>(content.size()));
        gzclose(file);
        if (written != static_cast<int>(content.size())) {
            throw RuntimeError("gzip write failed: " + path);
        }
#else
        throw RuntimeError("gzip output requested but zlib support is not compiled in: " + path);
#endif
    } else {
        write_file_atomic(path, content);
    }
}

}  // namespace pact
