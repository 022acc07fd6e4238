#pragma once

#include <climits>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pact/graph.hpp"

namespace pact {

// Comparison slop for realized loss/time against targets; keeps sums of
// on-grid values from missing an exactly-met target through roundoff.
inline constexpr double kTargetEps = 1e-9;

inline bool loss_target_met(double loss, double loss_target) {
    return loss <= loss_target + kTargetEps;
}

inline bool within_time(double elapsed, double time_limit) {
    return elapsed <= time_limit + kTargetEps;
}

// Minimum-energy route information from one origin. Vertex indices are
// topologically ordered in the graph (epoch never decreases), so distances
// come from a single forward relaxation sweep.
struct PathTable {
    std::vector<double> dist;                     // infinity when unreachable
    std::vector<std::int32_t> parent;             // predecessor index, -1 for none
    std::vector<std::uint32_t> feasible_targets;  // reachable feasible vertices, ascending
};

// Minimum-energy paths from `current` to every reachable feasible vertex.
// The zero-length path to `current` itself appears when the origin is
// feasible. Throws RuntimeError when `current` is not a graph vertex.
PathTable find_feasible_paths(const ExpandedGraph& g, std::uint32_t current);

// Vertex sequence current -> ... -> target along minimum-energy parents.
std::vector<std::uint32_t> reconstruct_path(const PathTable& table, std::uint32_t target);

// Candidate route with its selection diagnostics: weight is the summed edge
// energy, le/lr the expected/robust loss-delta sums along the route, opp the
// expected-vs-robust ratio, wr the cheapest alternative route that keeps the
// current model in play, risk = wr / weight, score = weight * risk / opp.
struct ScoredPath {
    std::vector<std::uint32_t> path;
    double weight = 0.0;
    double le = 0.0;
    double lr = 0.0;
    double opp = 1.0;
    double wr = 0.0;
    double risk = 1.0;
    double score = 0.0;
    int action_model_id = 0;
    int action_nodes_id = 0;
};

double combine_score(double weight, double opp, double risk);

// Cheapest feasible route from the origin that visits at least one future
// vertex carrying the origin's model; when no such route exists, returns
// cap_factor times the heaviest feasible-route weight (1 when that is 0).
double compute_wr(const ExpandedGraph& g, const PathTable& table, double cap_factor);

// Scores every nonzero-length feasible route. With truncate_at_horizon the
// le/lr sums stop after the forecast horizon's edges; weights always cover
// the whole route.
std::vector<ScoredPath> score_paths(const ExpandedGraph& g, const PathTable& table,
                                    bool truncate_at_horizon, double wr_cap_factor);

// Minimum-score route's first action; ties fall back to (weight, model id,
// node-set id). A single candidate is returned outright. nullopt on empty
// input, which callers surface as NO_FEASIBLE_PATH.
std::optional<Action> choose_action(const std::vector<ScoredPath>& scored);

enum class Outcome { TARGET_REACHED, TIME_EXCEEDED, NO_FEASIBLE_PATH };

const char* outcome_name(Outcome outcome);
Outcome outcome_from_name(const std::string& name);

struct TrajectoryRecord {
    int epoch = 0;
    int model = 0;   // configuration held before the action
    int nodes = 0;
    int action_model = 0;
    int action_nodes = 0;
    double delta_loss = 0.0;
    double delta_time = 0.0;
    double delta_energy = 0.0;
    double cum_time = 0.0;
    double cum_energy = 0.0;
    double loss = 0.0;  // after the action

    bool operator==(const TrajectoryRecord&) const = default;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    Outcome outcome = Outcome::NO_FEASIBLE_PATH;
    double total_time = 0.0;
    double total_energy = 0.0;
    double final_loss = 0.0;
    int epochs = 0;
    // Epoch of the first enacted model change; INT_MAX when the model never
    // changes.
    int first_switch_epoch = INT_MAX;

    bool operator==(const Trajectory&) const = default;
};

std::string trajectory_to_csv(const Trajectory& t);
Trajectory parse_trajectory_csv(const std::string& csv_text);

struct PlannerConfig {
    int horizon = 5;               // forecast epochs requested per round
    bool truncate_scoring = false; // limit le/lr sums to the horizon
    int lookahead = 0;             // graph expansion cap, 0 = time-grid bound
    double wr_cap_factor = 10.0;
    bool full_grid = false;        // plan on the complete lattice
    bool prune_hopeless = true;
    // Hard failsafe on planning rounds; 0 derives it from the time grid.
    // Exceeding it raises RuntimeError instead of fabricating an outcome.
    int max_epochs = 0;
};

// The receding-horizon control loop: per epoch, rebuild the graph from the
// realized re-quantized state, collect minimum-energy feasible routes, score
// them, enact the best route's first action under true dynamics, and append
// the observation to the history. Ends TARGET_REACHED when the realized loss
// meets the target in time, TIME_EXCEEDED when every runnable action would
// overrun the time limit, NO_FEASIBLE_PATH when no feasible route exists for
// any other reason.
Trajectory run_episode(const Scenario& s, Estimator& estimator, const TruthParams& truth,
                       const PlannerConfig& config = {});

// Shape parameters of the reference loss-time curve used by state_value:
// ideal(t) = l0 * ((t + ideal_offset) / ideal_offset)^(-b) with b solved so
// ideal(time_limit) = loss_target.
struct ValueConfig {
    double ideal_offset = 0.0;
    double logistic_scale = 0.0;
};

// ideal_offset = 0.1 * time_limit, logistic_scale = 0.05 * initial_loss.
ValueConfig default_value_config(const Constraints& c);

double ideal_loss(double t, const Constraints& c, const ValueConfig& config);

// Diagnostic progress score in [0, 1]: 1 once the loss target is strictly
// beaten in time, 0 once the time limit passed without reaching it,
// otherwise a logistic of the gap to the ideal curve. Never consulted by the
// planning algorithms.
double state_value(const State& state, const Constraints& c, const ValueConfig& config);

}  // namespace pact
