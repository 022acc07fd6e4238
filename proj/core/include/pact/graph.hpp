#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pact/estimators.hpp"
#include "pact/scenario.hpp"

namespace pact {

// Loss and duration live on integer lattices (index * resolution) so grid
// membership never suffers floating-point drift. Ceilings carry a small slop
// so values that are exact multiples up to roundoff map to themselves.
int quantize_up_index(double value, double resolution);
int quantize_down_index(double value, double resolution);
double quantize_up(double value, double resolution);

// Quantized planning state. epoch counts decision steps relative to the
// graph origin (0 = origin); model/nodes are dense indices into the
// scenario's sorted profile lists; loss_idx/time_idx are lattice indices.
struct VertexKey {
    int epoch = 0;
    int model_idx = 0;
    int nodes_idx = 0;
    int loss_idx = 0;
    int time_idx = 0;

    bool operator==(const VertexKey&) const = default;
};

// Packs to 64 bits: epoch 14, model 6, nodes 6, loss 18, time 20.
std::uint64_t pack_vertex(const VertexKey& key);
VertexKey unpack_vertex(std::uint64_t packed);

// One enacted action: leads to the quantized successor state one epoch
// later; weight is the action's energy cost.
struct EdgeOut {
    std::uint32_t to = 0;
    double weight = 0.0;

    bool operator==(const EdgeOut&) const = default;
};

// Per-round forecasts gathered at build time. One run forecast per runnable
// (model, nodes) pair and one single-step change forecast per switchable
// model pair; steps beyond the forecast horizon reuse the last entry.
struct ForecastCache {
    int horizon = 5;
    int num_models = 0;
    int num_nodes = 0;
    std::vector<Forecast> run;        // pair index = model_idx * num_nodes + nodes_idx
    std::vector<char> run_valid;
    std::vector<Forecast> change;     // index = from_idx * num_models + to_idx
    std::vector<char> change_valid;

    double expected_run(int model_idx, int nodes_idx, int rel_epoch) const;
    double robust_run(int model_idx, int nodes_idx, int rel_epoch) const;
    double expected_change(int from_idx, int to_idx) const;
    double robust_change(int from_idx, int to_idx) const;
};

struct GraphBuildOptions {
    // Enumerate the complete lattice per the construction procedure instead
    // of expanding only states reachable from the origin. Requires the
    // origin to sit at relative epoch 0.
    bool full_grid = false;
    // Reachable mode only: cap on relative epochs expanded; 0 leaves the
    // natural bound of one epoch per time-grid step.
    int lookahead = 0;
    // Forecast horizon requested from the estimator.
    int horizon = 5;
    // Reachable mode only: skip states whose loss cannot reach the target
    // under the most optimistic robust forecast within the remaining epochs.
    // Such states can never lie on a path to a feasible vertex, so paths and
    // distances to feasible vertices are unaffected.
    bool prune_hopeless = true;
};

class ExpandedGraph {
public:
    std::vector<std::uint64_t> keys;          // packed vertex keys, origin at index 0
    std::vector<EdgeOut> edges;               // flat adjacency
    std::vector<std::uint32_t> edge_offset;   // size keys.size() + 1
    std::vector<char> feasible;               // has the zero-cost edge to the sink
    std::unordered_map<std::uint64_t, std::uint32_t> index_of;

    Quantization quant;
    std::vector<int> model_ids;               // dense index -> id
    std::vector<int> node_ids;
    double initial_loss = 0.0;
    double loss_target = 0.0;
    double time_limit = 0.0;
    int kmax = 0;                             // epoch levels in the lattice
    int loss_top_idx = 0;                     // top loss lattice row
    int feasible_loss_idx = 0;                // loss rows at or below the target
    int feasible_time_idx = 0;                // time columns within the limit
    int origin_epoch_abs = 0;                 // absolute epoch of the origin
    bool full_grid = false;
    ForecastCache cache;

    static constexpr std::uint32_t kOrigin = 0;

    std::uint32_t vertex_count() const { return static_cast<std::uint32_t>(keys.size()); }
    // Lattice vertices excluding the origin; in full-grid mode this matches
    // |M| * |N| * kmax * (loss rows) * (time columns).
    std::size_t grid_vertex_count() const { return keys.size() - 1; }
    std::size_t edge_count() const { return edges.size(); }

    VertexKey vertex(std::uint32_t index) const { return unpack_vertex(keys[index]); }
    const EdgeOut* edges_begin(std::uint32_t v) const { return edges.data() + edge_offset[v]; }
    const EdgeOut* edges_end(std::uint32_t v) const { return edges.data() + edge_offset[v + 1]; }

    double loss_of(std::uint32_t v) const { return vertex(v).loss_idx * quant.gamma_loss; }
    double time_of(std::uint32_t v) const { return vertex(v).time_idx * quant.gamma_time; }

    // Loss-delta estimates attached to an edge, reconstructed from the
    // forecast cache (switch penalty plus run decrement of the target).
    double edge_expected_dloss(std::uint32_t from, const EdgeOut& e) const;
    double edge_robust_dloss(std::uint32_t from, const EdgeOut& e) const;
};

// Number of lattice vertices the full-grid construction must produce:
// |M| * |N| * ceil(Tmax/gamma_time) * (floor(l0/gamma_loss)+1) *
// (floor(Tmax/gamma_time)+1).
std::size_t expected_grid_vertex_count(const Scenario& s);

// Builds the planning graph from `origin`. The history must end at the
// origin's absolute epoch so forecasts align with it. Throws RuntimeError
// with the offending (epoch, model, nodes) context when the estimator fails.
ExpandedGraph build_graph(const Scenario& s, Estimator& estimator, const LossHistory& history,
                          const State& origin, const GraphBuildOptions& options = {});

// DOT rendering. Edges carry a `category` attribute and a color classifying
// the switch they perform: neither (black), node_only (green), model_only
// (purple), both (orange, dashed). Feasible vertices connect to the sink
// node "omega". With reachable_only, restricts to vertices reachable from
// the origin.
std::string export_dot(const ExpandedGraph& g, bool reachable_only = false);

// Debug adjacency dump, one `from -> to weight` row per edge plus sink rows;
// gzip-compressed when the path ends in ".gz" and zlib support is compiled
// in, plain text otherwise.
void dump_adjacency(const ExpandedGraph& g, const std::string& path);

}  // namespace pact
