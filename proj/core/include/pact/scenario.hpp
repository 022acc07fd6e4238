#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace pact {

struct ModelProfile {
    int id = 0;
    double pruning_ratio = 0.0;
    std::string label;

    bool operator==(const ModelProfile&) const = default;
};

struct NodeSetProfile {
    int id = 0;
    int num_classes = 1;
    int num_samples = 1;
    std::string label;

    bool operator==(const NodeSetProfile&) const = default;
};

// One cost-table cell. Absent time or energy means the combination is
// infeasible; feasibility requires both components finite.
struct CostEntry {
    std::optional<double> time;
    std::optional<double> energy;

    bool feasible() const { return time.has_value() && energy.has_value(); }
    bool operator==(const CostEntry&) const = default;
};

struct CostTables {
    // (model, nodes) -> per-epoch run cost; unlisted pairs are infeasible.
    std::map<std::pair<int, int>, CostEntry> run;
    // (model, nodes, model', nodes') -> switch cost; identity transitions are
    // always free and unlisted non-identity transitions are infeasible.
    std::map<std::tuple<int, int, int, int>, CostEntry> change;

    bool operator==(const CostTables&) const = default;
};

struct Constraints {
    double loss_target = 0.0;
    double time_limit = 0.0;
    double initial_loss = 0.0;

    bool operator==(const Constraints&) const = default;
};

struct Quantization {
    double gamma_loss = 0.0;
    double gamma_time = 0.0;

    bool operator==(const Quantization&) const = default;
};

struct State {
    int epoch = 0;
    double loss = 0.0;
    double elapsed = 0.0;
    int model = 0;
    int nodes = 0;

    bool operator==(const State&) const = default;
};

struct Action {
    int next_model = 0;
    int next_nodes = 0;

    bool operator==(const Action&) const = default;
    auto operator<=>(const Action&) const = default;
};

struct StepCost {
    double delta_time = 0.0;
    double delta_energy = 0.0;

    bool operator==(const StepCost&) const = default;
};

struct Scenario {
    std::vector<ModelProfile> models;      // sorted by id
    std::vector<NodeSetProfile> node_sets; // sorted by id
    CostTables costs;
    Constraints constraints;
    Quantization quantization;
    Action start;

    bool operator==(const Scenario&) const = default;

    const ModelProfile* model_by_id(int id) const;
    const NodeSetProfile* nodes_by_id(int id) const;
    int model_index(int id) const;  // -1 when unknown
    int nodes_index(int id) const;

    // Run cost of training (model, nodes) for one epoch; nullopt if the
    // combination is not runnable.
    std::optional<StepCost> run_cost(int model, int nodes) const;
    // Switch cost between configurations; (0, 0) for identity, nullopt when
    // the transition is not allowed.
    std::optional<StepCost> change_cost(int from_model, int from_nodes,
                                        int to_model, int to_nodes) const;
};

// Parses and fully validates a scenario document. Messages name the offending
// field path, e.g. "quantization.gamma_loss: must be strictly positive".
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Serializes back to the document schema accepted by parse_scenario.
std::string scenario_to_json(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

// Combined cost of enacting `action` from `state`: switch cost plus the run
// cost of the new configuration. nullopt when any component is infeasible.
std::optional<StepCost> step_cost(const Scenario& s, const State& state, const Action& action);

// All actions with finite step_cost from `state`, ordered by (model id,
// node-set id).
std::vector<Action> available_actions(const Scenario& s, const State& state);

}  // namespace pact
