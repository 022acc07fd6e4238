#include "pact/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pact/csvio.hpp"
#include "pact/dynamics.hpp"
#include "pact/errors.hpp"

namespace pact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PathTable find_feasible_paths(const ExpandedGraph& g, std::uint32_t current) {
    if (current >= g.vertex_count()) {
        throw RuntimeError("find_feasible_paths: vertex " + std::to_string(current) +
                           " is not in the graph");
    }
    PathTable table;
    table.dist.assign(g.vertex_count(), kInf);
    table.parent.assign(g.vertex_count(), -1);
    table.dist[current] = 0.0;
    // Edges always lead to higher indices, so one ascending sweep settles
    // every shortest distance.
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        double d = table.dist[v];
        if (d == kInf) {
            continue;
        }
        for (const EdgeOut* e = g.edges_begin(v); e != g.edges_end(v); ++e) {
            double nd = d + e->weight;
            if (nd < table.dist[e->to]) {
                table.dist[e->to] = nd;
                table.parent[e->to] = static_cast<std::int32_t>(v);
            }
        }
    }
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        if (g.feasible[v] && table.dist[v] < kInf) {
            table.feasible_targets.push_back(v);
        }
    }
    return table;
}

std::vector<std::uint32_t> reconstruct_path(const PathTable& table, std::uint32_t target) {
    std::vector<std::uint32_t> path;
    std::int32_t v = static_cast<std::int32_t>(target);
    while (v >= 0) {
        path.push_back(static_cast<std::uint32_t>(v));
        v = table.parent[static_cast<std::size_t>(v)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

double combine_score(double weight, double opp, double risk) {
    return weight * risk / opp;
}

double compute_wr(const ExpandedGraph& g, const PathTable& table, double cap_factor) {
    // Cost from each vertex onward to the nearest feasible vertex, swept in
    // reverse topological (descending index) order.
    std::vector<double> to_feasible(g.vertex_count(), kInf);
    for (std::uint32_t v = g.vertex_count(); v-- > 0;) {
        if (g.feasible[v]) {
            to_feasible[v] = 0.0;
        }
        for (const EdgeOut* e = g.edges_begin(v); e != g.edges_end(v); ++e) {
            to_feasible[v] = std::min(to_feasible[v], e->weight + to_feasible[e->to]);
        }
    }

    int current_model_idx = g.vertex(ExpandedGraph::kOrigin).model_idx;
    double wr = kInf;
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        VertexKey key = g.vertex(v);
        if (key.epoch < 1 || key.model_idx != current_model_idx) {
            continue;
        }
        if (table.dist[v] == kInf || to_feasible[v] == kInf) {
            continue;
        }
        wr = std::min(wr, table.dist[v] + to_feasible[v]);
    }
    if (wr < kInf) {
        return wr;
    }
    double heaviest = 0.0;
    for (std::uint32_t v : table.feasible_targets) {
        heaviest = std::max(heaviest, table.dist[v]);
    }
    double cap = cap_factor * heaviest;
    return cap > 0.0 ? cap : 1.0;
}

std::vector<ScoredPath> score_paths(const ExpandedGraph& g, const PathTable& table,
                                    bool truncate_at_horizon, double wr_cap_factor) {
    std::vector<ScoredPath> scored;
    bool any_route = false;
    for (std::uint32_t v : table.feasible_targets) {
        if (v != ExpandedGraph::kOrigin) {
            any_route = true;
            break;
        }
    }
    if (!any_route) {
        return scored;
    }
    double wr = compute_wr(g, table, wr_cap_factor);
    for (std::uint32_t target : table.feasible_targets) {
        if (target == ExpandedGraph::kOrigin) {
            continue;  // a zero-length route carries no enactable action
        }
        ScoredPath sp;
        sp.path = reconstruct_path(table, target);
        sp.weight = table.dist[target];
        int edge_limit = truncate_at_horizon
                             ? std::min<int>(static_cast<int>(sp.path.size()) - 1, g.cache.horizon)
                             : static_cast<int>(sp.path.size()) - 1;
        for (int i = 0; i < edge_limit; ++i) {
            VertexKey a = g.vertex(sp.path[i]);
            VertexKey b = g.vertex(sp.path[i + 1]);
            sp.le += g.cache.expected_change(a.model_idx, b.model_idx) +
                     g.cache.expected_run(b.model_idx, b.nodes_idx, a.epoch);
            sp.lr += g.cache.robust_change(a.model_idx, b.model_idx) +
                     g.cache.robust_run(b.model_idx, b.nodes_idx, a.epoch);
        }
        sp.opp = (sp.le * sp.lr > 0.0) ? sp.le / sp.lr : 1.0;
        sp.wr = wr;
        sp.risk = sp.weight > 0.0 ? wr / sp.weight : 1.0;
        // weight * (wr / weight) / opp collapses to wr / opp; evaluating the
        // collapsed form keeps scores bit-identical across routes with equal
        // opp, which the weight tie-break below relies on.
        sp.score = sp.weight > 0.0 ? sp.wr / sp.opp
                                   : combine_score(sp.weight, sp.opp, sp.risk);
        VertexKey first = g.vertex(sp.path[1]);
        sp.action_model_id = g.model_ids[first.model_idx];
        sp.action_nodes_id = g.node_ids[first.nodes_idx];
        scored.push_back(std::move(sp));
    }
    return scored;
}

std::optional<Action> choose_action(const std::vector<ScoredPath>& scored) {
    if (scored.empty()) {
        return std::nullopt;
    }
    const ScoredPath* best = &scored[0];
    for (std::size_t i = 1; i < scored.size(); ++i) {
        const ScoredPath& p = scored[i];
        auto key = [](const ScoredPath& sp) {
            return std::make_tuple(sp.score, sp.weight, sp.action_model_id, sp.action_nodes_id);
        };
        if (key(p) < key(*best)) {
            best = &p;
        }
    }
    return Action{best->action_model_id, best->action_nodes_id};
}

const char* outcome_name(Outcome outcome) {
    switch (outcome) {
        case Outcome::TARGET_REACHED:
            return "TARGET_REACHED";
        case Outcome::TIME_EXCEEDED:
            return "TIME_EXCEEDED";
        case Outcome::NO_FEASIBLE_PATH:
            return "NO_FEASIBLE_PATH";
    }
    return "NO_FEASIBLE_PATH";
}

Outcome outcome_from_name(const std::string& name) {
    if (name == "TARGET_REACHED") {
        return Outcome::TARGET_REACHED;
    }
    if (name == "TIME_EXCEEDED") {
        return Outcome::TIME_EXCEEDED;
    }
    if (name == "NO_FEASIBLE_PATH") {
        return Outcome::NO_FEASIBLE_PATH;
    }
    throw ValidationError("outcome: unknown value \"" + name + "\"");
}

std::string trajectory_to_csv(const Trajectory& t) {
    std::ostringstream out;
    out << "epoch,model,nodes,action_model,action_nodes,delta_loss,delta_time,delta_energy,"
           "cum_time,cum_energy,loss\n";
    for (const TrajectoryRecord& r : t.records) {
        out << r.epoch << "," << r.model << "," << r.nodes << "," << r.action_model << ","
            << r.action_nodes << "," << format_double(r.delta_loss) << ","
            << format_double(r.delta_time) << "," << format_double(r.delta_energy) << ","
            << format_double(r.cum_time) << "," << format_double(r.cum_energy) << ","
            << format_double(r.loss) << "\n";
    }
    out << "outcome," << outcome_name(t.outcome) << "\n";
    return out.str();
}

Trajectory parse_trajectory_csv(const std::string& csv_text) {
    auto lines = split_lines(csv_text);
    if (lines.empty() ||
        lines[0] !=
            "epoch,model,nodes,action_model,action_nodes,delta_loss,delta_time,delta_energy,"
            "cum_time,cum_energy,loss") {
        throw ValidationError("trajectory: missing or malformed header");
    }
    Trajectory t;
    bool outcome_seen = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto fields = split_csv_line(lines[i]);
        std::string context = "trajectory line " + std::to_string(i + 1);
        if (fields.size() == 2 && fields[0] == "outcome") {
            t.outcome = outcome_from_name(fields[1]);
            outcome_seen = true;
            continue;
        }
        if (outcome_seen) {
            throw ValidationError(context + ": rows after the outcome footer");
        }
        if (fields.size() != 11) {
            throw ValidationError(context + ": expected 11 fields, got " +
                                  std::to_string(fields.size()));
        }
        TrajectoryRecord r;
        try {
            r.epoch = std::stoi(fields[0]);
            r.model = std::stoi(fields[1]);
            r.nodes = std::stoi(fields[2]);
            r.action_model = std::stoi(fields[3]);
            r.action_nodes = std::stoi(fields[4]);
            r.delta_loss = std::stod(fields[5]);
            r.delta_time = std::stod(fields[6]);
            r.delta_energy = std::stod(fields[7]);
            r.cum_time = std::stod(fields[8]);
            r.cum_energy = std::stod(fields[9]);
            r.loss = std::stod(fields[10]);
        } catch (const std::exception&) {
            throw ValidationError(context + ": malformed numeric field");
        }
        if (r.action_model != r.model && t.first_switch_epoch == INT_MAX) {
            t.first_switch_epoch = r.epoch;
        }
        t.records.push_back(r);
        t.total_time = r.cum_time;
        t.total_energy = r.cum_energy;
        t.final_loss = r.loss;
    }
    if (!outcome_seen) {
        throw ValidationError("trajectory: missing outcome footer");
    }
    t.epochs = static_cast<int>(t.records.size());
    return t;
}

Trajectory run_episode(const Scenario& s, Estimator& estimator, const TruthParams& truth,
                       const PlannerConfig& config) {
    Trajectory t;
    State cur;
    cur.epoch = 0;
    cur.loss = s.constraints.initial_loss;
    cur.elapsed = 0.0;
    cur.model = s.start.next_model;
    cur.nodes = s.start.next_nodes;
    t.final_loss = cur.loss;

    LossHistory history{{0, cur.loss}};
    int kmax = quantize_up_index(s.constraints.time_limit, s.quantization.gamma_time);
    int epoch_bound = config.max_epochs > 0 ? config.max_epochs : kmax + 1;

    GraphBuildOptions build_options;
    build_options.full_grid = config.full_grid;
    build_options.lookahead = config.lookahead;
    build_options.horizon = config.horizon;
    build_options.prune_hopeless = config.prune_hopeless;

    for (;;) {
        if (loss_target_met(cur.loss, s.constraints.loss_target) &&
            within_time(cur.elapsed, s.constraints.time_limit)) {
            t.outcome = Outcome::TARGET_REACHED;
            break;
        }
        if (cur.epoch >= epoch_bound) {
            throw RuntimeError("episode exceeded the planning-round bound of " +
                               std::to_string(epoch_bound) + " epochs");
        }

        ExpandedGraph g = build_graph(s, estimator, history, cur, build_options);
        PathTable table = find_feasible_paths(g, ExpandedGraph::kOrigin);
        std::vector<ScoredPath> scored =
            score_paths(g, table, config.truncate_scoring, config.wr_cap_factor);
        std::optional<Action> action = choose_action(scored);
        if (!action) {
            if (cur.epoch == 0) {
                t.outcome = Outcome::NO_FEASIBLE_PATH;
            } else {
                auto actions = available_actions(s, cur);
                bool any_fits = false;
                for (const Action& a : actions) {
                    auto cost = step_cost(s, cur, a);
                    if (cost && within_time(cur.elapsed + cost->delta_time,
                                            s.constraints.time_limit)) {
                        any_fits = true;
                        break;
                    }
                }
                t.outcome = (!actions.empty() && !any_fits) ? Outcome::TIME_EXCEEDED
                                                            : Outcome::NO_FEASIBLE_PATH;
            }
            break;
        }

        StepRealization step = apply_action(s, truth, cur.epoch, cur, *action);
        TrajectoryRecord r;
        r.epoch = cur.epoch;
        r.model = cur.model;
        r.nodes = cur.nodes;
        r.action_model = action->next_model;
        r.action_nodes = action->next_nodes;
        r.delta_loss = step.delta_loss;
        r.delta_time = step.delta_time;
        r.delta_energy = step.delta_energy;
        r.cum_time = cur.elapsed + step.delta_time;
        r.cum_energy = t.total_energy + step.delta_energy;
        r.loss = step.new_loss;
        t.records.push_back(r);

        if (action->next_model != cur.model && t.first_switch_epoch == INT_MAX) {
            t.first_switch_epoch = cur.epoch;
        }
        cur.loss = step.new_loss;
        cur.elapsed += step.delta_time;
        cur.model = action->next_model;
        cur.nodes = action->next_nodes;
        cur.epoch += 1;
        history.push_back({cur.epoch, cur.loss});
        t.total_time = cur.elapsed;
        t.total_energy += step.delta_energy;
        t.final_loss = cur.loss;
        t.epochs = cur.epoch;
    }
    return t;
}

ValueConfig default_value_config(const Constraints& c) {
    return ValueConfig{0.1 * c.time_limit, 0.05 * c.initial_loss};
}

double ideal_loss(double t, const Constraints& c, const ValueConfig& config) {
    double t0 = config.ideal_offset;
    double b = std::log(c.initial_loss / c.loss_target) / std::log((c.time_limit + t0) / t0);
    return c.initial_loss * std::pow((t + t0) / t0, -b);
}

double state_value(const State& state, const Constraints& c, const ValueConfig& config) {
    bool loss_ok = state.loss < c.loss_target;
    bool time_ok = state.elapsed <= c.time_limit;
    if (loss_ok && time_ok) {
        return 1.0;
    }
    if (!time_ok && !loss_ok) {
        return 0.0;
    }
    double gap = ideal_loss(state.elapsed, c, config) - state.loss;
    return 1.0 / (1.0 + std::exp(-gap / config.logistic_scale));
}

}  // namespace pact
