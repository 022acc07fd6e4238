#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pact/dynamics.hpp"

namespace pact {

struct LossObservation {
    int epoch = 0;
    double loss = 0.0;

    bool operator==(const LossObservation&) const = default;
};

// Realized (epoch, loss) observations of the current training process, in
// strictly increasing epoch order. The entry at epoch k is the loss after k
// training epochs, so forecasts made from a history ending at epoch k cover
// epochs k, k+1, ... going forward.
using LossHistory = std::vector<LossObservation>;

// Per-epoch loss-delta predictions over a finite horizon. q_low/q_high are
// the 0.05/0.95 quantiles; q_high is the robust (conservative) estimate used
// for feasibility reasoning since loss deltas are negative when training
// progresses.
struct Forecast {
    int horizon = 0;
    std::vector<double> expected;
    std::vector<double> q_low;
    std::vector<double> q_high;

    bool operator==(const Forecast&) const = default;
};

struct EstimatorMetrics {
    double mae = 0.0;  // mean absolute error of expected vs realized
    double mil = 0.0;  // mean interval length q_high - q_low
    double icp = 0.0;  // fraction of realized values inside [q_low, q_high]
};

class Estimator {
public:
    virtual ~Estimator() = default;

    // Predicts per-epoch run loss deltas for (model, nodes) over the next
    // `horizon` epochs, starting at the epoch after the last history entry's
    // observation (i.e. entry i covers epoch history.back().epoch + i).
    virtual Forecast forecast_run(const LossHistory& history, int model, int nodes,
                                  int horizon) = 0;

    // Predicts the one-step loss delta of switching model_from -> model_to at
    // the epoch following the history. Identity switches forecast exactly 0.
    virtual Forecast forecast_change(const LossHistory& history, int model_from,
                                     int model_to) = 0;
};

// Wraps ground-truth dynamics. With zero bias and zero band it is an exact
// predictor; band_abs adds an absolute half-width around the expected value
// and band_sigma_z widens the interval to +/- z multiplicative noise standard
// deviations around the noise-free mean.
struct OracleConfig {
    double bias = 0.0;
    double band_abs = 0.0;
    double band_sigma_z = 0.0;
    double change_band_abs = 0.0;

    bool operator==(const OracleConfig&) const = default;
};

class OracleEstimator : public Estimator {
public:
    explicit OracleEstimator(TruthParams truth, OracleConfig cfg = {});

    Forecast forecast_run(const LossHistory& history, int model, int nodes,
                          int horizon) override;
    Forecast forecast_change(const LossHistory& history, int model_from, int model_to) override;

private:
    TruthParams truth_;
    OracleConfig cfg_;
};

struct CurveFitConfig {
    RunFamily family = RunFamily::EXP_DECAY;
    int max_points = 20;            // history tail length used by the fit
    double band_z = 1.6448536270;   // normal z for the 0.05/0.95 residual band
    double change_expected = 0.0;   // constant prior for switch penalties
    double change_band = 0.0;

    bool operator==(const CurveFitConfig&) const = default;
};

// Least-squares fit of the run family to the negative consecutive-epoch loss
// deltas in the history tail (log-linear for EXP_DECAY, log-log for
// POWER_LAW). Throws RuntimeError when the history contains no usable
// decrement.
RunParams fit_run_curve(const LossHistory& history, RunFamily family, int max_points);

// History-driven estimator: refits the configured family on every call and
// derives quantiles from the residual spread in log space. Change forecasts
// use the configured constant prior since the history of one process carries
// no information about unseen model switches.
class CurveFitEstimator : public Estimator {
public:
    explicit CurveFitEstimator(CurveFitConfig cfg = {});

    Forecast forecast_run(const LossHistory& history, int model, int nodes,
                          int horizon) override;
    Forecast forecast_change(const LossHistory& history, int model_from, int model_to) override;

private:
    CurveFitConfig cfg_;
};

// Replays predictions from a table, e.g. produced by an externally trained
// predictor. Run rows are keyed by (epoch, model, nodes); change rows by
// (model_from, model_to, switch_epoch), where a row without an epoch applies
// to any switch epoch. Lookup misses are hard errors.
class TableEstimator : public Estimator {
public:
    struct Row {
        double expected = 0.0;
        double q_low = 0.0;
        double q_high = 0.0;

        bool operator==(const Row&) const = default;
    };

    Forecast forecast_run(const LossHistory& history, int model, int nodes,
                          int horizon) override;
    Forecast forecast_change(const LossHistory& history, int model_from, int model_to) override;

    void add_run_row(int epoch, int model, int nodes, Row row);
    // switch_epoch nullopt registers the any-epoch fallback row.
    void add_change_row(int model_from, int model_to, std::optional<int> switch_epoch, Row row);

    // Row maps keyed (epoch, model, nodes) for runs and (from, to, epoch)
    // with epoch -1 as the any-epoch fallback for changes.
    const std::map<std::tuple<int, int, int>, Row>& run_rows() const { return run_rows_; }
    const std::map<std::tuple<int, int, int>, Row>& change_rows() const { return change_rows_; }

    bool operator==(const TableEstimator& other) const {
        return run_rows_ == other.run_rows_ && change_rows_ == other.change_rows_;
    }

private:
    std::map<std::tuple<int, int, int>, Row> run_rows_;
    std::map<std::tuple<int, int, int>, Row> change_rows_;
};

TableEstimator parse_prediction_table(const std::string& csv_text);
TableEstimator load_prediction_table(const std::string& path);
std::string prediction_table_to_csv(const TableEstimator& table);

// Adds a constant offset to expected and both quantiles of run forecasts for
// one model, leaving other models and change forecasts untouched. Models a
// systematically optimistic or pessimistic predictor.
class BiasedEstimator : public Estimator {
public:
    BiasedEstimator(std::shared_ptr<Estimator> inner, int target_model, double offset);

    Forecast forecast_run(const LossHistory& history, int model, int nodes,
                          int horizon) override;
    Forecast forecast_change(const LossHistory& history, int model_from, int model_to) override;

private:
    std::shared_ptr<Estimator> inner_;
    int target_model_;
    double offset_;
};

// Raises q_high to the caller-supplied per-step lower bounds (loss cannot
// drop faster than the bound allows); expected is raised alongside when the
// bound exceeds it so interval ordering survives.
Forecast clamp_to_bounds(const Forecast& forecast,
                         const std::optional<std::vector<double>>& floor);

// One-step-ahead evaluation: entry 0 of each forecast against the realized
// delta at the same position.
EstimatorMetrics estimator_metrics(const std::vector<Forecast>& predicted,
                                   const std::vector<double>& realized);

}  // namespace pact
