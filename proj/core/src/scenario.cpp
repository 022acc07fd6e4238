#include "pact/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "pact/csvio.hpp"
#include "pact/errors.hpp"

namespace pact {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
        }
    }
}

const json& require_field(const json& j, const std::string& path, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) {
        fail(path.empty() ? key : path + "." + key, "missing required field");
    }
    return *it;
}

double require_number(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (!v.is_number()) {
        fail(path + "." + key, "must be a number");
    }
    return v.get<double>();
}

int require_int(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (!v.is_number_integer()) {
        fail(path + "." + key, "must be an integer");
    }
    return v.get<int>();
}

std::string require_string(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (!v.is_string()) {
        fail(path + "." + key, "must be a string");
    }
    return v.get<std::string>();
}

// Cost cells accept a nonnegative number or the literal string "inf" marking
// an infeasible component.
std::optional<double> require_cost(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") {
            return std::nullopt;
        }
        fail(path + "." + key, "must be a nonnegative number or \"inf\"");
    }
    if (!v.is_number()) {
        fail(path + "." + key, "must be a nonnegative number or \"inf\"");
    }
    double d = v.get<double>();
    if (!std::isfinite(d)) {
        fail(path + "." + key, "must be finite; use \"inf\" to mark infeasible entries");
    }
    if (d < 0.0) {
        fail(path + "." + key, "must be >= 0");
    }
    return d;
}

const json& require_array(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (!v.is_array()) {
        fail(path.empty() ? key : path + "." + key, "must be an array");
    }
    return v;
}

const json& require_object(const json& j, const std::string& path, const std::string& key) {
    const json& v = require_field(j, path, key);
    if (!v.is_object()) {
        fail(path.empty() ? key : path + "." + key, "must be an object");
    }
    return v;
}

json cost_to_json(const std::optional<double>& v) {
    if (v.has_value()) {
        return *v;
    }
    return "inf";
}

}  // namespace

const ModelProfile* Scenario::model_by_id(int id) const {
    for (const auto& m : models) {
        if (m.id == id) {
            return &m;
        }
    }
    return nullptr;
}

const NodeSetProfile* Scenario::nodes_by_id(int id) const {
    for (const auto& n : node_sets) {
        if (n.id == id) {
            return &n;
        }
    }
    return nullptr;
}

int Scenario::model_index(int id) const {
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (models[i].id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

int Scenario::nodes_index(int id) const {
    for (std::size_t i = 0; i < node_sets.size(); ++i) {
        if (node_sets[i].id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::optional<StepCost> Scenario::run_cost(int model, int nodes) const {
    auto it = costs.run.find({model, nodes});
    if (it == costs.run.end() || !it->second.feasible()) {
        return std::nullopt;
    }
    return StepCost{*it->second.time, *it->second.energy};
}

std::optional<StepCost> Scenario::change_cost(int from_model, int from_nodes,
                                              int to_model, int to_nodes) const {
    if (from_model == to_model && from_nodes == to_nodes) {
        return StepCost{0.0, 0.0};
    }
    auto it = costs.change.find({from_model, from_nodes, to_model, to_nodes});
    if (it == costs.change.end() || !it->second.feasible()) {
        return std::nullopt;
    }
    return StepCost{*it->second.time, *it->second.energy};
}

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("document: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ValidationError("document: top level must be an object");
    }
    check_keys(doc, "", {"models", "node_sets", "run_costs", "change_costs",
                         "constraints", "quantization", "start"});

    Scenario s;

    const json& models = require_array(doc, "", "models");
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::string path = "models[" + std::to_string(i) + "]";
        const json& jm = models[i];
        if (!jm.is_object()) {
            fail(path, "must be an object");
        }
        check_keys(jm, path, {"id", "pruning_ratio", "label"});
        ModelProfile m;
        m.id = require_int(jm, path, "id");
        m.pruning_ratio = require_number(jm, path, "pruning_ratio");
        m.label = require_string(jm, path, "label");
        if (m.pruning_ratio < 0.0 || m.pruning_ratio >= 1.0) {
            fail(path + ".pruning_ratio", "must be in [0, 1)");
        }
        s.models.push_back(m);
    }
    if (s.models.empty()) {
        fail("models", "must not be empty");
    }
    std::sort(s.models.begin(), s.models.end(),
              [](const ModelProfile& a, const ModelProfile& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < s.models.size(); ++i) {
        if (s.models[i].id == s.models[i - 1].id) {
            fail("models", "duplicate id " + std::to_string(s.models[i].id));
        }
    }

    const json& nodes = require_array(doc, "", "node_sets");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::string path = "node_sets[" + std::to_string(i) + "]";
        const json& jn = nodes[i];
        if (!jn.is_object()) {
            fail(path, "must be an object");
        }
        check_keys(jn, path, {"id", "num_classes", "num_samples", "label"});
        NodeSetProfile n;
        n.id = require_int(jn, path, "id");
        n.num_classes = require_int(jn, path, "num_classes");
        n.num_samples = require_int(jn, path, "num_samples");
        n.label = require_string(jn, path, "label");
        if (n.num_classes < 1) {
            fail(path + ".num_classes", "must be >= 1");
        }
        if (n.num_samples < 1) {
            fail(path + ".num_samples", "must be >= 1");
        }
        s.node_sets.push_back(n);
    }
    if (s.node_sets.empty()) {
        fail("node_sets", "must not be empty");
    }
    std::sort(s.node_sets.begin(), s.node_sets.end(),
              [](const NodeSetProfile& a, const NodeSetProfile& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < s.node_sets.size(); ++i) {
        if (s.node_sets[i].id == s.node_sets[i - 1].id) {
            fail("node_sets", "duplicate id " + std::to_string(s.node_sets[i].id));
        }
    }

    const json& runs = require_array(doc, "", "run_costs");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::string path = "run_costs[" + std::to_string(i) + "]";
        const json& jr = runs[i];
        if (!jr.is_object()) {
            fail(path, "must be an object");
        }
        check_keys(jr, path, {"model", "nodes", "time", "energy"});
        int model = require_int(jr, path, "model");
        int node_set = require_int(jr, path, "nodes");
        if (!s.model_by_id(model)) {
            fail(path + ".model", "unknown model id " + std::to_string(model));
        }
        if (!s.nodes_by_id(node_set)) {
            fail(path + ".nodes", "unknown node-set id " + std::to_string(node_set));
        }
        CostEntry entry;
        entry.time = require_cost(jr, path, "time");
        entry.energy = require_cost(jr, path, "energy");
        auto key = std::make_pair(model, node_set);
        if (s.costs.run.count(key)) {
            fail(path, "duplicate (model, nodes) pair");
        }
        s.costs.run[key] = entry;
    }

    const json& changes = require_array(doc, "", "change_costs");
    for (std::size_t i = 0; i < changes.size(); ++i) {
        std::string path = "change_costs[" + std::to_string(i) + "]";
        const json& jc = changes[i];
        if (!jc.is_object()) {
            fail(path, "must be an object");
        }
        check_keys(jc, path, {"from_model", "from_nodes", "to_model", "to_nodes", "time", "energy"});
        int fm = require_int(jc, path, "from_model");
        int fn = require_int(jc, path, "from_nodes");
        int tm = require_int(jc, path, "to_model");
        int tn = require_int(jc, path, "to_nodes");
        for (auto [key, id] : {std::pair<const char*, int>{"from_model", fm}, {"to_model", tm}}) {
            if (!s.model_by_id(id)) {
                fail(path + "." + key, "unknown model id " + std::to_string(id));
            }
        }
        for (auto [key, id] : {std::pair<const char*, int>{"from_nodes", fn}, {"to_nodes", tn}}) {
            if (!s.nodes_by_id(id)) {
                fail(path + "." + key, "unknown node-set id " + std::to_string(id));
            }
        }
        CostEntry entry;
        entry.time = require_cost(jc, path, "time");
        entry.energy = require_cost(jc, path, "energy");
        if (fm == tm && fn == tn) {
            if (entry.time != std::optional<double>(0.0) || entry.energy != std::optional<double>(0.0)) {
                fail(path, "identity transition must have zero cost");
            }
            continue;  // identity entries are implicit
        }
        auto key = std::make_tuple(fm, fn, tm, tn);
        if (s.costs.change.count(key)) {
            fail(path, "duplicate transition");
        }
        s.costs.change[key] = entry;
    }

    const json& constraints = require_object(doc, "", "constraints");
    check_keys(constraints, "constraints", {"loss_target", "time_limit", "initial_loss"});
    s.constraints.loss_target = require_number(constraints, "constraints", "loss_target");
    s.constraints.time_limit = require_number(constraints, "constraints", "time_limit");
    s.constraints.initial_loss = require_number(constraints, "constraints", "initial_loss");
    if (s.constraints.loss_target <= 0.0) {
        fail("constraints.loss_target", "must be strictly positive");
    }
    if (s.constraints.loss_target >= s.constraints.initial_loss) {
        fail("constraints.loss_target", "must be < initial_loss");
    }
    if (s.constraints.time_limit <= 0.0) {
        fail("constraints.time_limit", "must be strictly positive");
    }

    const json& quant = require_object(doc, "", "quantization");
    check_keys(quant, "quantization", {"gamma_loss", "gamma_time"});
    s.quantization.gamma_loss = require_number(quant, "quantization", "gamma_loss");
    s.quantization.gamma_time = require_number(quant, "quantization", "gamma_time");
    if (s.quantization.gamma_loss <= 0.0) {
        fail("quantization.gamma_loss", "must be strictly positive");
    }
    if (s.quantization.gamma_time <= 0.0) {
        fail("quantization.gamma_time", "must be strictly positive");
    }
    if (s.quantization.gamma_loss > s.constraints.initial_loss) {
        fail("quantization.gamma_loss", "must be <= constraints.initial_loss");
    }
    if (s.quantization.gamma_time > s.constraints.time_limit) {
        fail("quantization.gamma_time", "must be <= constraints.time_limit");
    }

    const json& start = require_object(doc, "", "start");
    check_keys(start, "start", {"model", "nodes"});
    s.start.next_model = require_int(start, "start", "model");
    s.start.next_nodes = require_int(start, "start", "nodes");
    if (!s.model_by_id(s.start.next_model)) {
        fail("start.model", "unknown model id " + std::to_string(s.start.next_model));
    }
    if (!s.nodes_by_id(s.start.next_nodes)) {
        fail("start.nodes", "unknown node-set id " + std::to_string(s.start.next_nodes));
    }
    if (!s.run_cost(s.start.next_model, s.start.next_nodes)) {
        fail("start", "starting (model, nodes) combination is not runnable");
    }

    // Every epoch advances elapsed time by at least one run, so runnable
    // entries shorter than the time resolution would break the epoch grid.
    {
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const json& jr = runs[i];
            int model = jr.at("model").get<int>();
            int node_set = jr.at("nodes").get<int>();
            auto rc = s.run_cost(model, node_set);
            if (rc && rc->delta_time < s.quantization.gamma_time) {
                fail("run_costs[" + std::to_string(i) + "].time",
                     "must be >= quantization.gamma_time for runnable entries");
            }
        }
    }

    return s;
}

Scenario load_scenario(const std::string& path) {
    return parse_scenario(read_file(path));
}

std::string scenario_to_json(const Scenario& s) {
    json doc;
    doc["models"] = json::array();
    for (const auto& m : s.models) {
        doc["models"].push_back({{"id", m.id}, {"pruning_ratio", m.pruning_ratio}, {"label", m.label}});
    }
    doc["node_sets"] = json::array();
    for (const auto& n : s.node_sets) {
        doc["node_sets"].push_back({{"id", n.id},
                                    {"num_classes", n.num_classes},
                                    {"num_samples", n.num_samples},
                                    {"label", n.label}});
    }
    doc["run_costs"] = json::array();
    for (const auto& [key, entry] : s.costs.run) {
        doc["run_costs"].push_back({{"model", key.first},
                                    {"nodes", key.second},
                                    {"time", cost_to_json(entry.time)},
                                    {"energy", cost_to_json(entry.energy)}});
    }
    doc["change_costs"] = json::array();
    for (const auto& [key, entry] : s.costs.change) {
        doc["change_costs"].push_back({{"from_model", std::get<0>(key)},
                                       {"from_nodes", std::get<1>(key)},
                                       {"to_model", std::get<2>(key)},
                                       {"to_nodes", std::get<3>(key)},
                                       {"time", cost_to_json(entry.time)},
                                       {"energy", cost_to_json(entry.energy)}});
    }
    doc["constraints"] = {{"loss_target", s.constraints.loss_target},
                          {"time_limit", s.constraints.time_limit},
                          {"initial_loss", s.constraints.initial_loss}};
    doc["quantization"] = {{"gamma_loss", s.quantization.gamma_loss},
                           {"gamma_time", s.quantization.gamma_time}};
    doc["start"] = {{"model", s.start.next_model}, {"nodes", s.start.next_nodes}};
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::string& path) {
    write_file_atomic(path, scenario_to_json(s));
}

std::optional<StepCost> step_cost(const Scenario& s, const State& state, const Action& action) {
    auto change = s.change_cost(state.model, state.nodes, action.next_model, action.next_nodes);
    if (!change) {
        return std::nullopt;
    }
    auto run = s.run_cost(action.next_model, action.next_nodes);
    if (!run) {
        return std::nullopt;
    }
    return StepCost{change->delta_time + run->delta_time, change->delta_energy + run->delta_energy};
}

std::vector<Action> available_actions(const Scenario& s, const State& state) {
    std::vector<Action> actions;
    for (const auto& m : s.models) {
        for (const auto& n : s.node_sets) {
            Action a{m.id, n.id};
            if (step_cost(s, state, a)) {
                actions.push_back(a);
            }
        }
    }
    return actions;
}

}  // namespace pact
