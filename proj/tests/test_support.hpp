#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "pact/dynamics.hpp"
#include "pact/scenario.hpp"

namespace testsup {

inline std::string scenario_dir() { return PACT_SCENARIO_DIR; }

inline std::string scenario_path(const std::string& name) {
    return scenario_dir() + "/" + name;
}

// Builds Scenario values directly, bypassing the parser, for tests that need
// configurations the schema-level validation would reject or that are easier
// to state in code.
class ScenarioBuilder {
public:
    ScenarioBuilder& model(int id, double pruning_ratio = 0.0, const std::string& label = "") {
        s_.models.push_back({id, pruning_ratio, label});
        return *this;
    }

    ScenarioBuilder& nodes(int id, const std::string& label = "") {
        s_.node_sets.push_back({id, 1, 1, label});
        return *this;
    }

    ScenarioBuilder& run(int model, int nodes, double time, double energy) {
        s_.costs.run[{model, nodes}] = pact::CostEntry{time, energy};
        return *this;
    }

    ScenarioBuilder& change(int fm, int fn, int tm, int tn, double time, double energy) {
        s_.costs.change[{fm, fn, tm, tn}] = pact::CostEntry{time, energy};
        return *this;
    }

    ScenarioBuilder& constraints(double loss_target, double time_limit, double initial_loss) {
        s_.constraints = {loss_target, time_limit, initial_loss};
        return *this;
    }

    ScenarioBuilder& quant(double gamma_loss, double gamma_time) {
        s_.quantization = {gamma_loss, gamma_time};
        return *this;
    }

    ScenarioBuilder& start(int model, int nodes) {
        s_.start = {model, nodes};
        return *this;
    }

    pact::Scenario build() {
        pact::Scenario out = s_;
        std::sort(out.models.begin(), out.models.end(),
                  [](const auto& a, const auto& b) { return a.id < b.id; });
        std::sort(out.node_sets.begin(), out.node_sets.end(),
                  [](const auto& a, const auto& b) { return a.id < b.id; });
        return out;
    }

private:
    pact::Scenario s_;
};

class TruthBuilder {
public:
    explicit TruthBuilder(pact::RunFamily family = pact::RunFamily::EXP_DECAY) {
        t_.run_family = family;
    }

    TruthBuilder& run(int model, int nodes, double lambda0, double decay) {
        t_.run_params[{model, nodes}] = pact::RunParams{lambda0, decay};
        return *this;
    }

    TruthBuilder& penalty(int from, int to, double delta) {
        t_.change_penalty[{from, to}] = delta;
        return *this;
    }

    TruthBuilder& noise(double sigma) {
        t_.noise_sigma = sigma;
        return *this;
    }

    TruthBuilder& seed(std::uint64_t s) {
        t_.seed = s;
        return *this;
    }

    pact::TruthParams build() const { return t_; }

private:
    pact::TruthParams t_;
};

// One model, one node set, constant loss decrement per epoch.
inline pact::Scenario single_pair_scenario(double run_time, double run_energy,
                                           double loss_target, double time_limit,
                                           double gamma_loss, double gamma_time) {
    return ScenarioBuilder{}
        .model(0)
        .nodes(0)
        .run(0, 0, run_time, run_energy)
        .constraints(loss_target, time_limit, 1.0)
        .quant(gamma_loss, gamma_time)
        .start(0, 0)
        .build();
}

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        for (int i = 0; i < 64; ++i) {
            auto candidate = base / ("pact_test_" + std::to_string(rng()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate.string();
                return;
            }
        }
        throw std::runtime_error("could not create a temporary directory");
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }

    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

}  // namespace testsup
