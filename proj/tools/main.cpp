#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "harness.hpp"
#include "pact/csvio.hpp"
#include "pact/errors.hpp"
#include "pact/graph.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item =
            comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
        const char* begin = item.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw pact::ValidationError(flag + ": not a number: '" + item + "'");
        }
        values.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (values.empty()) {
        throw pact::ValidationError(flag + ": expected at least one value");
    }
    return values;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item =
            comma == std::string::npos ? text.substr(pos) : text.substr(pos, comma - pos);
        const char* begin = item.c_str();
        char* end = nullptr;
        unsigned long long v = std::strtoull(begin, &end, 10);
        if (end == begin || *end != '\0') {
            throw pact::ValidationError("--seeds: not an unsigned integer: '" + item + "'");
        }
        seeds.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (seeds.empty()) {
        throw pact::ValidationError("--seeds: expected at least one seed");
    }
    return seeds;
}

struct BiasArg {
    int model = -1;
    double offset = 0.0;
};

BiasArg parse_bias_arg(const std::string& text) {
    BiasArg bias;
    std::string model_part = text;
    std::string offset_part;
    std::size_t colon = text.find(':');
    if (colon != std::string::npos) {
        model_part = text.substr(0, colon);
        offset_part = text.substr(colon + 1);
    }
    {
        const char* begin = model_part.c_str();
        char* end = nullptr;
        long v = std::strtol(begin, &end, 10);
        if (end == begin || *end != '\0' || v < 0) {
            throw pact::ValidationError("--bias: expected <model id>:<offset>, got '" + text +
                                        "'");
        }
        bias.model = static_cast<int>(v);
    }
    if (!offset_part.empty()) {
        const char* begin = offset_part.c_str();
        char* end = nullptr;
        bias.offset = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw pact::ValidationError("--bias: offset is not a number: '" + offset_part +
                                        "'");
        }
    }
    return bias;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planner and experiment harness for energy-minimal model/node-set schedules "
                 "in cooperative training"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string truth_path;
    std::string out_path;
    std::string strategy_name_arg = "pact";
    std::string sweep_arg;
    std::string bias_arg;
    std::string seeds_arg = "1";
    std::string targets_arg;
    std::string estimator_name = "oracle";
    std::string table_path;
    std::string family_name;
    std::string adjacency_path;
    long long budget = 10000000;
    double margin = 0.05;
    int horizon = 5;
    int lookahead = 64;
    int max_epochs = 0;
    bool full_grid = false;
    bool no_prune = false;
    bool truncate_scoring = false;
    bool reachable_only = false;
    double wr_cap = 10.0;
    double band_z = 0.0;
    double band_abs = 0.0;
    double change_band_abs = 0.0;
    int fit_points = 20;
    double fit_z = 1.6448536270;
    double gamma_loss = 0.0;
    double gamma_time = 0.0;
    int eval_runs = 10;
    int eval_horizon = 5;
    int eval_warmup = 1;
    std::uint64_t eval_seed = 1;

    auto add_scenario_flags = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "Scenario JSON path")->required();
        cmd->add_option("--truth", truth_path,
                        "Ground-truth dynamics JSON (default: <scenario>.truth.json)");
        cmd->add_option("--gamma-loss", gamma_loss, "Override the loss quantization step");
        cmd->add_option("--gamma-time", gamma_time, "Override the time quantization step");
    };
    auto add_planner_flags = [&](CLI::App* cmd) {
        cmd->add_option("--horizon", horizon, "Forecast epochs requested per planning round")
            ->capture_default_str();
        cmd->add_option("--lookahead", lookahead,
                        "Graph expansion depth cap in epochs, 0 = uncapped")
            ->capture_default_str();
        cmd->add_option("--max-epochs", max_epochs,
                        "Episode epoch limit, 0 = derived from the time grid");
        cmd->add_flag("--full-grid", full_grid,
                      "Plan on the complete quantized lattice instead of reachable states");
        cmd->add_flag("--no-prune", no_prune, "Keep states that cannot reach the loss target");
        cmd->add_flag("--truncate-scoring", truncate_scoring,
                      "Limit score sums to the forecast horizon");
        cmd->add_option("--wr-cap", wr_cap, "Reference-weight cap factor for risk scoring")
            ->capture_default_str();
    };
    auto add_estimator_flags = [&](CLI::App* cmd) {
        cmd->add_option("--estimator", estimator_name,
                        "Estimator kind: oracle, curve_fit or table")
            ->capture_default_str();
        cmd->add_option("--table", table_path, "Prediction table CSV for the table estimator");
        cmd->add_option("--band-z", band_z,
                        "Oracle run-forecast band half-width in noise standard deviations");
        cmd->add_option("--band-abs", band_abs, "Oracle absolute run-forecast band half-width");
        cmd->add_option("--change-band-abs", change_band_abs,
                        "Oracle absolute band half-width on switch penalties");
        cmd->add_option("--family", family_name,
                        "Curve-fit family: exp_decay or power_law (default: truth family)");
        cmd->add_option("--fit-points", fit_points, "History tail length for the curve fit")
            ->capture_default_str();
        cmd->add_option("--fit-z", fit_z, "Curve-fit residual band z value")
            ->capture_default_str();
    };

    CLI::App* run_cmd =
        app.add_subcommand("run", "Run one strategy, optionally sweeping a parameter");
    add_scenario_flags(run_cmd);
    add_planner_flags(run_cmd);
    add_estimator_flags(run_cmd);
    run_cmd->add_option("--strategy", strategy_name_arg,
                        "pact, optimum, static_learn or one_switch")
        ->capture_default_str();
    run_cmd->add_option("--sweep", sweep_arg,
                        "Parameter sweep: loss_target|gamma_loss|bias=<v1,v2,...>");
    run_cmd->add_option("--bias", bias_arg,
                        "Run-forecast offset '<model id>:<offset>' for the pact strategy");
    run_cmd->add_option("--seeds", seeds_arg, "Comma-separated RNG seeds")
        ->capture_default_str();
    run_cmd->add_option("--out", out_path, "Output directory")->required();
    run_cmd->add_option("--budget", budget, "Enumeration budget for the optimum strategy")
        ->capture_default_str();
    run_cmd->add_option("--margin", margin, "Relative improvement margin for static_learn")
        ->capture_default_str();

    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "Run all four strategies over a loss-target grid and check their ordering");
    add_scenario_flags(compare_cmd);
    add_planner_flags(compare_cmd);
    add_estimator_flags(compare_cmd);
    compare_cmd->add_option("--targets", targets_arg,
                            "Comma-separated loss targets (default: 0.1..0.45 step 0.05)");
    compare_cmd->add_option("--budget", budget, "Enumeration budget for the optimum strategy")
        ->capture_default_str();
    compare_cmd->add_option("--margin", margin, "Relative improvement margin for static_learn")
        ->capture_default_str();
    compare_cmd->add_option("--out", out_path, "Directory for compare.csv (optional)");

    CLI::App* graph_cmd =
        app.add_subcommand("graph-dump", "Export the epoch-0 expanded decision graph as DOT");
    add_scenario_flags(graph_cmd);
    add_planner_flags(graph_cmd);
    add_estimator_flags(graph_cmd);
    graph_cmd->add_option("--out", out_path, "DOT output path")->required();
    graph_cmd->add_flag("--reachable-only", reachable_only,
                        "Restrict a full-grid export to vertices reachable from the origin");
    graph_cmd->add_option("--adjacency", adjacency_path,
                          "Also dump a plain adjacency list (gzip when the path ends in .gz)");

    CLI::App* eval_cmd = app.add_subcommand(
        "estimator-eval", "Measure one-step forecast error and interval coverage");
    add_scenario_flags(eval_cmd);
    add_estimator_flags(eval_cmd);
    eval_cmd->add_option("--runs", eval_runs, "Number of independent trajectories")
        ->capture_default_str();
    eval_cmd->add_option("--eval-horizon", eval_horizon, "Forecasted epochs per trajectory")
        ->capture_default_str();
    eval_cmd->add_option("--warmup", eval_warmup, "Observed epochs before the first forecast")
        ->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed, "Root seed for the trajectory realizations")
        ->capture_default_str();
    eval_cmd->add_option("--out", out_path, "CSV output path (optional)");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Check a scenario (and its truth file) for consistency");
    add_scenario_flags(validate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        pact::EstimatorSpec estimator_spec;
        estimator_spec.kind = pact::estimator_kind_from_name(estimator_name);
        estimator_spec.oracle.band_sigma_z = band_z;
        estimator_spec.oracle.band_abs = band_abs;
        estimator_spec.oracle.change_band_abs = change_band_abs;
        estimator_spec.curve_fit.max_points = fit_points;
        estimator_spec.curve_fit.band_z = fit_z;
        if (!family_name.empty()) {
            estimator_spec.curve_family = pact::run_family_from_name(family_name);
        }
        estimator_spec.table_path = table_path;

        pact::PlannerConfig planner;
        planner.horizon = horizon;
        planner.truncate_scoring = truncate_scoring;
        planner.lookahead = lookahead;
        planner.wr_cap_factor = wr_cap;
        planner.full_grid = full_grid;
        planner.prune_hopeless = !no_prune;
        planner.max_epochs = max_epochs;

        std::optional<double> gamma_loss_override;
        std::optional<double> gamma_time_override;
        if (gamma_loss > 0.0) {
            gamma_loss_override = gamma_loss;
        }
        if (gamma_time > 0.0) {
            gamma_time_override = gamma_time;
        }

        if (run_cmd->parsed()) {
            pact::ExperimentSpec spec;
            spec.scenario_path = scenario_path;
            spec.truth_path = truth_path;
            spec.strategy = pact::strategy_from_name(strategy_name_arg);
            if (!sweep_arg.empty()) {
                std::size_t eq = sweep_arg.find('=');
                if (eq == std::string::npos) {
                    throw pact::ValidationError("--sweep: expected <param>=<v1,v2,...>");
                }
                spec.sweep = pact::sweep_parameter_from_name(sweep_arg.substr(0, eq));
                if (spec.sweep == pact::SweepParameter::NONE) {
                    throw pact::ValidationError("--sweep: 'none' is not a sweepable parameter");
                }
                spec.sweep_values = parse_double_list(sweep_arg.substr(eq + 1), "--sweep");
            }
            if (!bias_arg.empty()) {
                BiasArg bias = parse_bias_arg(bias_arg);
                spec.bias_model = bias.model;
                spec.bias_offset = bias.offset;
            }
            spec.seeds = parse_seed_list(seeds_arg);
            spec.output_dir = out_path;
            spec.budget = budget;
            spec.margin = margin;
            spec.planner = planner;
            spec.estimator = estimator_spec;
            spec.gamma_loss_override = gamma_loss_override;
            spec.gamma_time_override = gamma_time_override;

            pact::ExperimentResult result = pact::run_experiment(spec);
            int feasible = 0;
            int errored = 0;
            for (const auto& run : result.runs) {
                if (run.errored) {
                    ++errored;
                } else if (run.summary.outcome == pact::Outcome::TARGET_REACHED) {
                    ++feasible;
                }
            }
            std::printf("runs: %zu, target reached: %d, errors: %d\n", result.runs.size(),
                        feasible, errored);
            std::printf("outputs written to %s\n", spec.output_dir.c_str());
            if (result.partial) {
                for (const auto& run : result.runs) {
                    if (run.errored) {
                        std::fprintf(stderr, "error: %s\n", run.error.c_str());
                    }
                }
                return 2;
            }
            return result.any_feasible ? 0 : 3;
        }

        if (compare_cmd->parsed()) {
            pact::CompareSpec spec;
            spec.scenario_path = scenario_path;
            spec.truth_path = truth_path;
            if (!targets_arg.empty()) {
                spec.loss_targets = parse_double_list(targets_arg, "--targets");
            }
            spec.budget = budget;
            spec.margin = margin;
            spec.planner = planner;
            spec.estimator = estimator_spec;
            spec.output_dir = out_path;
            if (gamma_loss_override || gamma_time_override) {
                throw pact::ValidationError(
                    "compare: quantization overrides are not supported; edit the scenario");
            }
            pact::CompareReport report = pact::run_compare(spec);
            std::fputs(report.table_text.c_str(), stdout);
            std::printf("\n");
            for (const auto& note : report.notes) {
                std::printf("%s\n", note.c_str());
            }
            return report.any_feasible ? 0 : 3;
        }

        if (graph_cmd->parsed()) {
            pact::Scenario s = pact::load_scenario(scenario_path);
            std::string tp = truth_path.empty() ? pact::default_truth_path(scenario_path)
                                                : truth_path;
            pact::TruthParams truth = pact::load_truth(tp);
            if (gamma_loss_override) {
                s.quantization.gamma_loss = *gamma_loss_override;
            }
            if (gamma_time_override) {
                s.quantization.gamma_time = *gamma_time_override;
            }
            if (s.quantization.gamma_loss <= 0.0 ||
                s.quantization.gamma_loss > s.constraints.initial_loss) {
                throw pact::ValidationError(
                    "quantization.gamma_loss: must be in (0, initial_loss]");
            }
            std::shared_ptr<pact::Estimator> est =
                pact::make_estimator(estimator_spec, truth);

            pact::State origin;
            origin.loss = s.constraints.initial_loss;
            origin.model = s.start.next_model;
            origin.nodes = s.start.next_nodes;
            pact::LossHistory history{{0, origin.loss}};
            pact::GraphBuildOptions options;
            options.full_grid = full_grid;
            options.lookahead = lookahead;
            options.horizon = horizon;
            options.prune_hopeless = !no_prune;

            pact::ExpandedGraph g = pact::build_graph(s, *est, history, origin, options);
            std::string dot = pact::export_dot(g, reachable_only);
            pact::write_file_atomic(out_path, dot);
            if (!adjacency_path.empty()) {
                pact::dump_adjacency(g, adjacency_path);
            }
            std::size_t feasible = 0;
            for (std::size_t v = 1; v < g.keys.size(); ++v) {
                if (g.feasible[v]) {
                    ++feasible;
                }
            }
            std::printf("grid vertices: %zu, edges: %zu, feasible vertices: %zu\n",
                        g.grid_vertex_count(), g.edge_count(), feasible);
            std::printf("dot written to %s\n", out_path.c_str());
            return 0;
        }

        if (eval_cmd->parsed()) {
            pact::EstimatorEvalSpec spec;
            spec.scenario_path = scenario_path;
            spec.truth_path = truth_path;
            spec.estimator = estimator_spec;
            spec.num_trajectories = eval_runs;
            spec.horizon = eval_horizon;
            spec.warmup = eval_warmup;
            spec.seed = eval_seed;
            spec.output_path = out_path;
            pact::EstimatorEvalReport report = pact::run_estimator_eval(spec);
            std::fputs(report.csv_text.c_str(), stdout);
            return 0;
        }

        if (validate_cmd->parsed()) {
            pact::Scenario s = pact::load_scenario(scenario_path);
            if (gamma_loss_override || gamma_time_override) {
                if (gamma_loss_override) {
                    s.quantization.gamma_loss = *gamma_loss_override;
                }
                if (gamma_time_override) {
                    s.quantization.gamma_time = *gamma_time_override;
                }
                // Re-run the schema checks with the overrides in place.
                s = pact::parse_scenario(pact::scenario_to_json(s));
            }
            std::size_t runnable = 0;
            for (const auto& [key, entry] : s.costs.run) {
                if (entry.feasible()) {
                    ++runnable;
                }
            }
            std::printf("scenario OK: %zu models, %zu node sets, %zu runnable pairs\n",
                        s.models.size(), s.node_sets.size(), runnable);
            std::printf("expected grid vertices per build: %zu\n",
                        pact::expected_grid_vertex_count(s));
            std::string tp = truth_path.empty() ? pact::default_truth_path(scenario_path)
                                                : truth_path;
            if (!truth_path.empty() || std::filesystem::exists(tp)) {
                pact::TruthParams truth = pact::load_truth(tp);
                for (const auto& [key, entry] : s.costs.run) {
                    if (entry.feasible() &&
                        truth.run_params.find(key) == truth.run_params.end()) {
                        throw pact::ValidationError(
                            "truth.run_params: missing entry for runnable pair (model " +
                            std::to_string(key.first) + ", nodes " +
                            std::to_string(key.second) + ")");
                    }
                }
                std::printf("truth OK: family %s, %zu run entries, noise sigma %s\n",
                            pact::run_family_name(truth.run_family).c_str(),
                            truth.run_params.size(),
                            pact::format_double(truth.noise_sigma).c_str());
            } else {
                std::printf("truth: no file at %s\n", tp.c_str());
            }
            return 0;
        }
    } catch (const pact::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
    return 0;
}
