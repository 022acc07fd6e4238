#include "pact/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pact/csvio.hpp"
#include "pact/errors.hpp"

namespace pact {

namespace {

int next_epoch(const LossHistory& history) {
    if (history.empty()) {
        throw RuntimeError("forecast requires a nonempty loss history");
    }
    return history.back().epoch;
}

void check_horizon(int horizon) {
    if (horizon < 1) {
        throw RuntimeError("forecast horizon must be >= 1");
    }
}

Forecast zero_forecast(int horizon) {
    Forecast f;
    f.horizon = horizon;
    f.expected.assign(horizon, 0.0);
    f.q_low.assign(horizon, 0.0);
    f.q_high.assign(horizon, 0.0);
    return f;
}

}  // namespace

OracleEstimator::OracleEstimator(TruthParams truth, OracleConfig cfg)
    : truth_(std::move(truth)), cfg_(cfg) {}

Forecast OracleEstimator::forecast_run(const LossHistory& history, int model, int nodes,
                                       int horizon) {
    check_horizon(horizon);
    int first = next_epoch(history);
    Forecast f;
    f.horizon = horizon;
    for (int i = 0; i < horizon; ++i) {
        double mean = mean_run_delta(truth_, first + i, model, nodes);
        double expected = mean + cfg_.bias;
        double lo = expected;
        double hi = expected;
        if (cfg_.band_sigma_z > 0.0) {
            double spread = cfg_.band_sigma_z * truth_.noise_sigma;
            lo = std::min(lo, mean * (1.0 + spread));
            hi = std::max(hi, mean * (1.0 - spread));
        }
        f.expected.push_back(expected);
        f.q_low.push_back(lo - cfg_.band_abs);
        f.q_high.push_back(hi + cfg_.band_abs);
    }
    return f;
}

Forecast OracleEstimator::forecast_change(const LossHistory& history, int model_from,
                                          int model_to) {
    (void)next_epoch(history);
    if (model_from == model_to) {
        return zero_forecast(1);
    }
    double delta = true_change_delta(truth_, model_from, model_to);
    Forecast f;
    f.horizon = 1;
    f.expected = {delta};
    f.q_low = {delta - cfg_.change_band_abs};
    f.q_high = {delta + cfg_.change_band_abs};
    return f;
}

RunParams fit_run_curve(const LossHistory& history, RunFamily family, int max_points) {
    // Pair consecutive epochs and keep strict decrements; switch epochs and
    // stalls do not carry run-curve information.
    std::vector<std::pair<int, double>> samples;  // (source epoch, |delta|)
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        if (history[i + 1].epoch != history[i].epoch + 1) {
            continue;
        }
        double delta = history[i + 1].loss - history[i].loss;
        if (delta < 0.0) {
            samples.emplace_back(history[i].epoch, -delta);
        }
    }
    if (samples.empty()) {
        throw RuntimeError("history contains no usable loss decrement to fit");
    }
    if (static_cast<int>(samples.size()) > max_points) {
        samples.erase(samples.begin(), samples.end() - max_points);
    }
    if (samples.size() == 1) {
        return RunParams{samples[0].second, 0.0};
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [k, mag] : samples) {
        double x = family == RunFamily::EXP_DECAY ? static_cast<double>(k)
                                                  : std::log(1.0 + static_cast<double>(k));
        double y = std::log(mag);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(samples.size());
    double denom = n * sxx - sx * sx;
    double slope = denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    RunParams fit;
    fit.lambda0 = std::exp(intercept);
    fit.decay = std::max(0.0, -slope);
    return fit;
}

CurveFitEstimator::CurveFitEstimator(CurveFitConfig cfg) : cfg_(cfg) {}

Forecast CurveFitEstimator::forecast_run(const LossHistory& history, int model, int nodes,
                                         int horizon) {
    (void)model;
    (void)nodes;
    check_horizon(horizon);
    int first = next_epoch(history);
    RunParams fit = fit_run_curve(history, cfg_.family, cfg_.max_points);

    // Residual spread of the fit in log space drives the quantile band.
    std::vector<std::pair<int, double>> samples;
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        if (history[i + 1].epoch != history[i].epoch + 1) {
            continue;
        }
        double delta = history[i + 1].loss - history[i].loss;
        if (delta < 0.0) {
            samples.emplace_back(history[i].epoch, -delta);
        }
    }
    if (static_cast<int>(samples.size()) > cfg_.max_points) {
        samples.erase(samples.begin(), samples.end() - cfg_.max_points);
    }
    double resid_sq = 0.0;
    for (const auto& [k, mag] : samples) {
        double predicted = cfg_.family == RunFamily::EXP_DECAY
                               ? fit.lambda0 * std::exp(-static_cast<double>(k) * fit.decay)
                               : fit.lambda0 * std::pow(1.0 + static_cast<double>(k), -fit.decay);
        double r = std::log(mag) - std::log(predicted);
        resid_sq += r * r;
    }
    double spread = samples.size() > 2
                        ? std::sqrt(resid_sq / (static_cast<double>(samples.size()) - 2.0))
                        : 0.0;
    double widen = std::exp(cfg_.band_z * spread);

    Forecast f;
    f.horizon = horizon;
    for (int i = 0; i < horizon; ++i) {
        int k = first + i;
        double mag = cfg_.family == RunFamily::EXP_DECAY
                         ? fit.lambda0 * std::exp(-static_cast<double>(k) * fit.decay)
                         : fit.lambda0 * std::pow(1.0 + static_cast<double>(k), -fit.decay);
        f.expected.push_back(-mag);
        f.q_low.push_back(-mag * widen);
        f.q_high.push_back(-mag / widen);
    }
    return f;
}

Forecast CurveFitEstimator::forecast_change(const LossHistory& history, int model_from,
                                            int model_to) {
    (void)next_epoch(history);
    if (model_from == model_to) {
        return zero_forecast(1);
    }
    Forecast f;
    f.horizon = 1;
    f.expected = {cfg_.change_expected};
    f.q_low = {cfg_.change_expected - cfg_.change_band};
    f.q_high = {cfg_.change_expected + cfg_.change_band};
    return f;
}

Forecast TableEstimator::forecast_run(const LossHistory& history, int model, int nodes,
                                      int horizon) {
    check_horizon(horizon);
    int first = next_epoch(history);
    Forecast f;
    f.horizon = horizon;
    for (int i = 0; i < horizon; ++i) {
        auto it = run_rows_.find({first + i, model, nodes});
        if (it == run_rows_.end()) {
            throw RuntimeError("prediction table has no run row for epoch " +
                               std::to_string(first + i) + ", model " + std::to_string(model) +
                               ", nodes " + std::to_string(nodes));
        }
        f.expected.push_back(it->second.expected);
        f.q_low.push_back(it->second.q_low);
        f.q_high.push_back(it->second.q_high);
    }
    return f;
}

Forecast TableEstimator::forecast_change(const LossHistory& history, int model_from,
                                         int model_to) {
    int epoch = next_epoch(history);
    if (model_from == model_to) {
        return zero_forecast(1);
    }
    auto it = change_rows_.find({model_from, model_to, epoch});
    if (it == change_rows_.end()) {
        it = change_rows_.find({model_from, model_to, -1});
    }
    if (it == change_rows_.end()) {
        throw RuntimeError("prediction table has no change row for " + std::to_string(model_from) +
                           " -> " + std::to_string(model_to) + " at epoch " +
                           std::to_string(epoch));
    }
    Forecast f;
    f.horizon = 1;
    f.expected = {it->second.expected};
    f.q_low = {it->second.q_low};
    f.q_high = {it->second.q_high};
    return f;
}

void TableEstimator::add_run_row(int epoch, int model, int nodes, Row row) {
    run_rows_[{epoch, model, nodes}] = row;
}

void TableEstimator::add_change_row(int model_from, int model_to, std::optional<int> switch_epoch,
                                    Row row) {
    change_rows_[{model_from, model_to, switch_epoch.value_or(-1)}] = row;
}

namespace {

constexpr const char* kTableHeader = "kind,epoch,model,nodes,model_to,expected,q05,q95";

int parse_int_field(const std::string& value, const std::string& context) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError(context + ": not an integer: \"" + value + "\"");
    }
}

double parse_double_field(const std::string& value, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError(context + ": not a number: \"" + value + "\"");
    }
}

}  // namespace

TableEstimator parse_prediction_table(const std::string& csv_text) {
    auto lines = split_lines(csv_text);
    if (lines.empty() || lines[0] != kTableHeader) {
        throw ValidationError("prediction table: missing or malformed header, expected \"" +
                              std::string(kTableHeader) + "\"");
    }
    TableEstimator table;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        std::string context = "prediction table line " + std::to_string(i + 1);
        auto fields = split_csv_line(lines[i]);
        if (fields.size() != 8) {
            throw ValidationError(context + ": expected 8 fields, got " +
                                  std::to_string(fields.size()));
        }
        const std::string& kind = fields[0];
        TableEstimator::Row row;
        row.expected = parse_double_field(fields[5], context + " expected");
        row.q_low = parse_double_field(fields[6], context + " q05");
        row.q_high = parse_double_field(fields[7], context + " q95");
        if (!(row.q_low <= row.expected && row.expected <= row.q_high)) {
            throw ValidationError(context + ": quantiles must satisfy q05 <= expected <= q95");
        }
        if (kind == "run") {
            int epoch = parse_int_field(fields[1], context + " epoch");
            int model = parse_int_field(fields[2], context + " model");
            int nodes = parse_int_field(fields[3], context + " nodes");
            if (!fields[4].empty()) {
                throw ValidationError(context + ": run rows must leave model_to empty");
            }
            table.add_run_row(epoch, model, nodes, row);
        } else if (kind == "change") {
            std::optional<int> epoch;
            if (!fields[1].empty()) {
                epoch = parse_int_field(fields[1], context + " epoch");
            }
            int model = parse_int_field(fields[2], context + " model");
            int model_to = parse_int_field(fields[4], context + " model_to");
            if (!fields[3].empty()) {
                throw ValidationError(context + ": change rows must leave nodes empty");
            }
            table.add_change_row(model, model_to, epoch, row);
        } else {
            throw ValidationError(context + ": kind must be \"run\" or \"change\"");
        }
    }
    return table;
}

TableEstimator load_prediction_table(const std::string& path) {
    return parse_prediction_table(read_file(path));
}

std::string prediction_table_to_csv(const TableEstimator& table) {
    std::ostringstream out;
    out << kTableHeader << "\n";
    for (const auto& [key, row] : table.run_rows()) {
        out << "run," << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key)
            << ",," << format_double(row.expected) << "," << format_double(row.q_low) << ","
            << format_double(row.q_high) << "\n";
    }
    for (const auto& [key, row] : table.change_rows()) {
        out << "change,";
        if (std::get<2>(key) >= 0) {
            out << std::get<2>(key);
        }
        out << "," << std::get<0>(key) << ",," << std::get<1>(key) << ","
            << format_double(row.expected) << "," << format_double(row.q_low) << ","
            << format_double(row.q_high) << "\n";
    }
    return out.str();
}

BiasedEstimator::BiasedEstimator(std::shared_ptr<Estimator> inner, int target_model, double offset)
    : inner_(std::move(inner)), target_model_(target_model), offset_(offset) {}

Forecast BiasedEstimator::forecast_run(const LossHistory& history, int model, int nodes,
                                       int horizon) {
    Forecast f = inner_->forecast_run(history, model, nodes, horizon);
    if (model != target_model_) {
        return f;
    }
    for (int i = 0; i < f.horizon; ++i) {
        f.expected[i] += offset_;
        f.q_low[i] += offset_;
        f.q_high[i] += offset_;
    }
    return f;
}

Forecast BiasedEstimator::forecast_change(const LossHistory& history, int model_from,
                                          int model_to) {
    return inner_->forecast_change(history, model_from, model_to);
}

Forecast clamp_to_bounds(const Forecast& forecast,
                         const std::optional<std::vector<double>>& floor) {
    if (!floor.has_value()) {
        return forecast;
    }
    if (static_cast<int>(floor->size()) != forecast.horizon) {
        throw RuntimeError("clamp_to_bounds: floor length " + std::to_string(floor->size()) +
                           " does not match forecast horizon " +
                           std::to_string(forecast.horizon));
    }
    Forecast out = forecast;
    for (int i = 0; i < out.horizon; ++i) {
        out.q_high[i] = std::max(out.q_high[i], (*floor)[i]);
        out.expected[i] = std::max(out.expected[i], std::min((*floor)[i], out.q_high[i]));
    }
    return out;
}

EstimatorMetrics estimator_metrics(const std::vector<Forecast>& predicted,
                                   const std::vector<double>& realized) {
    if (predicted.empty()) {
        throw RuntimeError("estimator_metrics: empty input");
    }
    if (predicted.size() != realized.size()) {
        throw RuntimeError("estimator_metrics: " + std::to_string(predicted.size()) +
                           " forecasts vs " + std::to_string(realized.size()) +
                           " realized values");
    }
    EstimatorMetrics m;
    double covered = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const Forecast& f = predicted[i];
        if (f.horizon < 1) {
            throw RuntimeError("estimator_metrics: forecast " + std::to_string(i) +
                               " has empty horizon");
        }
        m.mae += std::abs(f.expected[0] - realized[i]);
        m.mil += f.q_high[0] - f.q_low[0];
        if (f.q_low[0] <= realized[i] && realized[i] <= f.q_high[0]) {
            covered += 1.0;
        }
    }
    double n = static_cast<double>(predicted.size());
    m.mae /= n;
    m.mil /= n;
    m.icp = covered / n;
    return m;
}

}  // namespace pact
