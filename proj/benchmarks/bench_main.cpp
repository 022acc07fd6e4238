#include <benchmark/benchmark.h>

#include <string>

#include "pact/baselines.hpp"
#include "pact/dynamics.hpp"
#include "pact/estimators.hpp"
#include "pact/graph.hpp"
#include "pact/planner.hpp"
#include "pact/scenario.hpp"

namespace {

std::string scenario_path(const std::string& name) {
    return std::string(PACT_SCENARIO_DIR) + "/" + name;
}

// Two models x two node sets, every pair runnable, stay-only actions; the
// loss resolution controls the grid size.
pact::Scenario grid_scenario(double gamma_loss) {
    pact::Scenario s;
    for (int m = 0; m < 2; ++m) {
        s.models.push_back({m, m * 0.5, ""});
    }
    for (int n = 0; n < 2; ++n) {
        s.node_sets.push_back({n, 1, 1, ""});
    }
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            s.costs.run[{m, n}] = pact::CostEntry{0.2, 1.0};
        }
    }
    s.constraints = {0.5, 2.0, 1.0};
    s.quantization = {gamma_loss, 0.2};
    s.start = {0, 0};
    return s;
}

pact::TruthParams grid_truth() {
    pact::TruthParams t;
    for (int m = 0; m < 2; ++m) {
        for (int n = 0; n < 2; ++n) {
            t.run_params[{m, n}] = pact::RunParams{0.1, 0.0};
        }
    }
    return t;
}

pact::State grid_origin() {
    pact::State origin;
    origin.loss = 1.0;
    origin.model = 0;
    origin.nodes = 0;
    return origin;
}

void BM_full_grid_build(benchmark::State& state) {
    double gamma_loss = 1.0 / static_cast<double>(state.range(0));
    pact::Scenario s = grid_scenario(gamma_loss);
    pact::TruthParams t = grid_truth();
    pact::OracleEstimator est(t);
    pact::LossHistory h{{0, 1.0}};
    pact::GraphBuildOptions options;
    options.full_grid = true;
    options.prune_hopeless = false;

    std::size_t vertices = 0;
    for (auto _ : state) {
        pact::ExpandedGraph g = pact::build_graph(s, est, h, grid_origin(), options);
        vertices = g.vertex_count();
        benchmark::DoNotOptimize(g);
    }
    state.counters["vertices"] = static_cast<double>(vertices);
}
BENCHMARK(BM_full_grid_build)->Arg(22)->Arg(220)->Arg(2200)->Unit(benchmark::kMillisecond);

void BM_feasible_paths(benchmark::State& state) {
    pact::Scenario s = grid_scenario(1.0 / 220.0);
    pact::TruthParams t = grid_truth();
    pact::OracleEstimator est(t);
    pact::LossHistory h{{0, 1.0}};
    pact::GraphBuildOptions options;
    options.full_grid = true;
    options.prune_hopeless = false;
    pact::ExpandedGraph g = pact::build_graph(s, est, h, grid_origin(), options);

    for (auto _ : state) {
        pact::PathTable table = pact::find_feasible_paths(g, pact::ExpandedGraph::kOrigin);
        benchmark::DoNotOptimize(table);
    }
    state.counters["vertices"] = static_cast<double>(g.vertex_count());
}
BENCHMARK(BM_feasible_paths)->Unit(benchmark::kMillisecond);

void BM_reference_episode(benchmark::State& state) {
    pact::Scenario s = pact::load_scenario(scenario_path("reference.json"));
    pact::TruthParams t = pact::load_truth(scenario_path("reference.truth.json"));
    pact::PlannerConfig cfg;
    cfg.lookahead = 48;

    for (auto _ : state) {
        pact::OracleEstimator est(t);
        pact::Trajectory traj = pact::run_episode(s, est, t, cfg);
        benchmark::DoNotOptimize(traj);
    }
}
BENCHMARK(BM_reference_episode)->Unit(benchmark::kMillisecond);

void BM_brute_force_small(benchmark::State& state) {
    pact::Scenario s;
    s.models.push_back({0, 0.0, ""});
    s.models.push_back({1, 0.5, ""});
    s.node_sets.push_back({0, 1, 1, ""});
    s.costs.run[{0, 0}] = pact::CostEntry{0.5, 1.0};
    s.costs.run[{1, 0}] = pact::CostEntry{0.5, 0.625};
    s.costs.change[{0, 0, 1, 0}] = pact::CostEntry{0.0, 0.125};
    s.costs.change[{1, 0, 0, 0}] = pact::CostEntry{0.0, 0.125};
    s.constraints = {0.2, 3.0, 1.0};
    s.quantization = {0.05, 0.5};
    s.start = {0, 0};

    pact::TruthParams t;
    t.run_params[{0, 0}] = pact::RunParams{0.2, 0.0};
    t.run_params[{1, 0}] = pact::RunParams{0.15, 0.0};
    t.change_penalty[{0, 1}] = 0.05;
    t.change_penalty[{1, 0}] = 0.05;

    for (auto _ : state) {
        pact::StrategyResult r = pact::brute_force_optimum(s, t, 6);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_brute_force_small);

}  // namespace

BENCHMARK_MAIN();
