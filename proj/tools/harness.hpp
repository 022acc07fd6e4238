#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pact/baselines.hpp"
#include "pact/estimators.hpp"
#include "pact/planner.hpp"
#include "pact/scenario.hpp"

namespace pact {

enum class StrategyKind { PACT, OPTIMUM, STATIC_LEARN, ONE_SWITCH };

std::string strategy_name(StrategyKind k);
StrategyKind strategy_from_name(const std::string& name);

enum class SweepParameter { NONE, LOSS_TARGET, GAMMA_LOSS, BIAS };

std::string sweep_parameter_name(SweepParameter p);
SweepParameter sweep_parameter_from_name(const std::string& name);

enum class EstimatorKind { ORACLE, CURVE_FIT, TABLE };

std::string estimator_kind_name(EstimatorKind k);
EstimatorKind estimator_kind_from_name(const std::string& name);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::ORACLE;
    OracleConfig oracle;
    CurveFitConfig curve_fit;
    // Curve-fit family; defaults to the truth dynamics family when unset.
    std::optional<RunFamily> curve_family;
    std::string table_path;
};

std::shared_ptr<Estimator> make_estimator(const EstimatorSpec& spec, const TruthParams& truth);

struct ExperimentSpec {
    std::string scenario_path;
    std::string truth_path;  // empty: scenario path with .truth.json extension
    StrategyKind strategy = StrategyKind::PACT;
    SweepParameter sweep = SweepParameter::NONE;
    std::vector<double> sweep_values;  // nonempty when sweep is set
    int bias_model = -1;               // model id whose run forecasts get offset
    double bias_offset = 0.0;          // replaced by the value under a bias sweep
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir;
    long long budget = 10000000;
    double margin = 0.05;
    PlannerConfig planner;
    EstimatorSpec estimator;
    std::optional<double> gamma_loss_override;
    std::optional<double> gamma_time_override;
};

struct RunSummary {
    StrategyKind strategy = StrategyKind::PACT;
    SweepParameter sweep = SweepParameter::NONE;
    std::optional<double> sweep_value;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::NO_FEASIBLE_PATH;
    int epochs = 0;
    double total_time = 0.0;
    double total_energy = 0.0;
    // Keyed by model id over all scenario models; values sum to total_energy.
    std::map<int, double> energy_by_model;
};

struct RunOutcome {
    RunSummary summary;
    Trajectory trajectory;
    std::string trajectory_file;  // name within the output directory
    bool errored = false;
    std::string error;
};

struct ExperimentResult {
    std::vector<RunOutcome> runs;
    bool partial = false;       // at least one run failed with a runtime error
    bool any_feasible = false;  // at least one run reached the loss target
    std::string summary_text;
    std::string curves_text;
    std::string manifest_text;
};

// Executes every (sweep value, seed) run of the spec and writes one
// trajectory CSV per run plus summary.csv, curves.csv and manifest.json into
// spec.output_dir. Failed runs are recorded in the manifest instead of
// aborting the experiment.
ExperimentResult run_experiment(const ExperimentSpec& spec);

RunSummary summarize_trajectory(const Scenario& s, StrategyKind strategy, SweepParameter sweep,
                                std::optional<double> sweep_value, std::uint64_t seed,
                                const Trajectory& t);

std::string build_summary_csv(const Scenario& s, const std::vector<RunOutcome>& runs);
std::vector<RunSummary> parse_summary_csv(const std::string& text);

struct CurvePoint {
    std::optional<double> sweep_value;
    int runs = 0;
    int feasible = 0;
    double mean_energy = 0.0;  // aggregates over feasible runs; nan when none
    double min_energy = 0.0;
    double max_energy = 0.0;
};

std::string build_curves_csv(const std::vector<RunOutcome>& runs);
std::vector<CurvePoint> parse_curves_csv(const std::string& text);

struct CompareSpec {
    std::string scenario_path;
    std::string truth_path;
    std::vector<double> loss_targets;  // empty: the default 0.10..0.45 grid
    long long budget = 10000000;
    double margin = 0.05;
    PlannerConfig planner;
    EstimatorSpec estimator;
    std::string output_dir;  // optional: writes compare.csv when set
};

struct CompareRow {
    double loss_target = 0.0;
    StrategyKind strategy = StrategyKind::PACT;
    Outcome outcome = Outcome::NO_FEASIBLE_PATH;
    int epochs = 0;
    double total_time = 0.0;
    double total_energy = 0.0;       // +inf when the target was not reached
    bool budget_exceeded = false;    // exhaustive search ran out of budget
    double energy_bound = 0.0;       // best bound reported in that case
};

struct CompareReport {
    std::vector<CompareRow> rows;  // loss_target-major, strategy order fixed
    std::vector<std::string> notes;
    bool all_orderings_hold = true;
    bool any_feasible = false;
    std::string table_text;
    std::string csv_text;
};

// Runs all four strategies per loss target and checks the ordering
// optimum <= pact <= min(static_learn, one_switch) on total energy, treating
// unreached targets as +inf. A budget-exceeded optimum demotes that target's
// check to pact vs the heuristics only, with a note.
CompareReport run_compare(const CompareSpec& spec);

std::vector<double> default_loss_target_grid();

struct EstimatorEvalSpec {
    std::string scenario_path;
    std::string truth_path;
    EstimatorSpec estimator;
    int num_trajectories = 10;
    int horizon = 5;  // forecasted epochs per trajectory
    int warmup = 1;   // observed epochs before the first forecast
    std::uint64_t seed = 1;
    std::string output_path;  // optional CSV destination
};

struct EstimatorEvalReport {
    EstimatorMetrics mean;
    EstimatorMetrics stddev;  // sample standard deviation across trajectories
    int trajectories = 0;
    std::string csv_text;
};

// Rolls out num_trajectories independent realizations on the scenario's
// start configuration, collecting one-step-ahead forecasts against realized
// loss deltas, and reports MAE / mean interval length / interval coverage.
EstimatorEvalReport run_estimator_eval(const EstimatorEvalSpec& spec);

std::string default_truth_path(const std::string& scenario_path);

}  // namespace pact
