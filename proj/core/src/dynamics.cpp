#include "pact/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pact/csvio.hpp"
#include "pact/errors.hpp"
#include "pact/rng.hpp"

namespace pact {

using nlohmann::json;

std::string run_family_name(RunFamily f) {
    return f == RunFamily::EXP_DECAY ? "EXP_DECAY" : "POWER_LAW";
}

RunFamily run_family_from_name(const std::string& name) {
    if (name == "EXP_DECAY") {
        return RunFamily::EXP_DECAY;
    }
    if (name == "POWER_LAW") {
        return RunFamily::POWER_LAW;
    }
    throw ValidationError("run_family: unknown value \"" + name + "\"");
}

namespace {

const RunParams& find_run_params(const TruthParams& params, int model, int nodes) {
    auto it = params.run_params.find({model, nodes});
    if (it == params.run_params.end()) {
        throw RuntimeError("no loss dynamics parameters for model " + std::to_string(model) +
                           ", nodes " + std::to_string(nodes));
    }
    return it->second;
}

}  // namespace

double mean_run_delta(const TruthParams& params, int epoch, int model, int nodes) {
    const RunParams& rp = find_run_params(params, model, nodes);
    double magnitude;
    if (params.run_family == RunFamily::EXP_DECAY) {
        magnitude = rp.lambda0 * std::exp(-static_cast<double>(epoch) * rp.decay);
    } else {
        magnitude = rp.lambda0 * std::pow(1.0 + static_cast<double>(epoch), -rp.decay);
    }
    return -magnitude;
}

double true_run_delta(const TruthParams& params, int epoch, int model, int nodes) {
    double mean = mean_run_delta(params, epoch, model, nodes);
    if (params.noise_sigma == 0.0) {
        return mean;
    }
    double z = truncated_normal_draw(params.seed, static_cast<std::uint64_t>(epoch), kNoiseCut);
    return mean * (1.0 + params.noise_sigma * z);
}

double true_change_delta(const TruthParams& params, int model_from, int model_to) {
    if (model_from == model_to) {
        return 0.0;
    }
    auto it = params.change_penalty.find({model_from, model_to});
    if (it == params.change_penalty.end()) {
        throw RuntimeError("infeasible model transition " + std::to_string(model_from) + " -> " +
                           std::to_string(model_to) + ": no change penalty configured");
    }
    return it->second;
}

StepRealization apply_action(const Scenario& s, const TruthParams& params, int epoch,
                             const State& state, const Action& action) {
    auto cost = step_cost(s, state, action);
    if (!cost) {
        throw RuntimeError("infeasible action (" + std::to_string(action.next_model) + ", " +
                           std::to_string(action.next_nodes) + ") from (" +
                           std::to_string(state.model) + ", " + std::to_string(state.nodes) + ")");
    }
    double change = true_change_delta(params, state.model, action.next_model);
    double run = true_run_delta(params, epoch, action.next_model, action.next_nodes);
    StepRealization out;
    out.new_loss = std::max(0.0, state.loss + change + run);
    out.delta_loss = out.new_loss - state.loss;
    out.delta_time = cost->delta_time;
    out.delta_energy = cost->delta_energy;
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

}  // namespace

TruthParams parse_truth(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("document: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ValidationError("document: top level must be an object");
    }
    for (const auto& item : doc.items()) {
        static const char* allowed[] = {"run_family", "run_params", "change_penalty",
                                        "noise_sigma", "seed"};
        bool ok = false;
        for (const char* key : allowed) {
            ok = ok || item.key() == key;
        }
        if (!ok) {
            fail(item.key(), "unknown key");
        }
    }

    TruthParams params;
    if (!doc.contains("run_family") || !doc["run_family"].is_string()) {
        fail("run_family", "missing or not a string");
    }
    params.run_family = run_family_from_name(doc["run_family"].get<std::string>());

    if (!doc.contains("run_params") || !doc["run_params"].is_array()) {
        fail("run_params", "missing or not an array");
    }
    for (std::size_t i = 0; i < doc["run_params"].size(); ++i) {
        std::string path = "run_params[" + std::to_string(i) + "]";
        const json& jr = doc["run_params"][i];
        if (!jr.is_object()) {
            fail(path, "must be an object");
        }
        for (const auto& item : jr.items()) {
            if (item.key() != "model" && item.key() != "nodes" && item.key() != "lambda0" &&
                item.key() != "decay") {
                fail(path + "." + item.key(), "unknown key");
            }
        }
        if (!jr.contains("model") || !jr["model"].is_number_integer()) {
            fail(path + ".model", "missing or not an integer");
        }
        if (!jr.contains("nodes") || !jr["nodes"].is_number_integer()) {
            fail(path + ".nodes", "missing or not an integer");
        }
        if (!jr.contains("lambda0") || !jr["lambda0"].is_number()) {
            fail(path + ".lambda0", "missing or not a number");
        }
        if (!jr.contains("decay") || !jr["decay"].is_number()) {
            fail(path + ".decay", "missing or not a number");
        }
        RunParams rp{jr["lambda0"].get<double>(), jr["decay"].get<double>()};
        if (rp.lambda0 < 0.0) {
            fail(path + ".lambda0", "must be >= 0");
        }
        if (rp.decay < 0.0) {
            fail(path + ".decay", "must be >= 0");
        }
        auto key = std::make_pair(jr["model"].get<int>(), jr["nodes"].get<int>());
        if (params.run_params.count(key)) {
            fail(path, "duplicate (model, nodes) pair");
        }
        params.run_params[key] = rp;
    }

    if (doc.contains("change_penalty")) {
        if (!doc["change_penalty"].is_array()) {
            fail("change_penalty", "must be an array");
        }
        for (std::size_t i = 0; i < doc["change_penalty"].size(); ++i) {
            std::string path = "change_penalty[" + std::to_string(i) + "]";
            const json& jc = doc["change_penalty"][i];
            if (!jc.is_object()) {
                fail(path, "must be an object");
            }
            for (const auto& item : jc.items()) {
                if (item.key() != "from_model" && item.key() != "to_model" &&
                    item.key() != "delta") {
                    fail(path + "." + item.key(), "unknown key");
                }
            }
            if (!jc.contains("from_model") || !jc["from_model"].is_number_integer()) {
                fail(path + ".from_model", "missing or not an integer");
            }
            if (!jc.contains("to_model") || !jc["to_model"].is_number_integer()) {
                fail(path + ".to_model", "missing or not an integer");
            }
            if (!jc.contains("delta") || !jc["delta"].is_number()) {
                fail(path + ".delta", "missing or not a number");
            }
            int from = jc["from_model"].get<int>();
            int to = jc["to_model"].get<int>();
            double delta = jc["delta"].get<double>();
            if (delta < 0.0) {
                fail(path + ".delta", "must be >= 0");
            }
            if (from == to && delta != 0.0) {
                fail(path, "identity transition must have zero penalty");
            }
            if (from == to) {
                continue;
            }
            auto key = std::make_pair(from, to);
            if (params.change_penalty.count(key)) {
                fail(path, "duplicate (from_model, to_model) pair");
            }
            params.change_penalty[key] = delta;
        }
    }

    if (doc.contains("noise_sigma")) {
        if (!doc["noise_sigma"].is_number()) {
            fail("noise_sigma", "must be a number");
        }
        params.noise_sigma = doc["noise_sigma"].get<double>();
        if (params.noise_sigma < 0.0) {
            fail("noise_sigma", "must be >= 0");
        }
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
            fail("seed", "must be an integer");
        }
        params.seed = doc["seed"].get<std::uint64_t>();
    }
    return params;
}

TruthParams load_truth(const std::string& path) {
    return parse_truth(read_file(path));
}

std::string truth_to_json(const TruthParams& params) {
    json doc;
    doc["run_family"] = run_family_name(params.run_family);
    doc["run_params"] = json::array();
    for (const auto& [key, rp] : params.run_params) {
        doc["run_params"].push_back({{"model", key.first},
                                     {"nodes", key.second},
                                     {"lambda0", rp.lambda0},
                                     {"decay", rp.decay}});
    }
    doc["change_penalty"] = json::array();
    for (const auto& [key, delta] : params.change_penalty) {
        doc["change_penalty"].push_back(
            {{"from_model", key.first}, {"to_model", key.second}, {"delta", delta}});
    }
    doc["noise_sigma"] = params.noise_sigma;
    doc["seed"] = params.seed;
    return doc.dump(2) + "\n";
}

void save_truth(const TruthParams& params, const std::string& path) {
    write_file_atomic(path, truth_to_json(params));
}

}  // namespace pact
