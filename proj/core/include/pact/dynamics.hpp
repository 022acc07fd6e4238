#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pact/scenario.hpp"

namespace pact {

enum class RunFamily { EXP_DECAY, POWER_LAW };

std::string run_family_name(RunFamily f);
RunFamily run_family_from_name(const std::string& name);

// Parameters of the per-epoch training-loss decrement for one (model, nodes)
// combination. EXP_DECAY yields -lambda0 * exp(-epoch * decay), POWER_LAW
// yields -lambda0 * (1 + epoch)^(-decay); epoch counts from 0.
struct RunParams {
    double lambda0 = 0.0;
    double decay = 0.0;

    bool operator==(const RunParams&) const = default;
};

struct TruthParams {
    RunFamily run_family = RunFamily::EXP_DECAY;
    std::map<std::pair<int, int>, RunParams> run_params;    // (model, nodes)
    std::map<std::pair<int, int>, double> change_penalty;   // (from_model, to_model)
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const TruthParams&) const = default;
};

// Noise draws are truncated at +/- this many standard deviations so robust
// bands of matching width cover every realization.
inline constexpr double kNoiseCut = 3.0;

// Noise-free per-epoch loss decrement for training (model, nodes) at `epoch`.
double mean_run_delta(const TruthParams& params, int epoch, int model, int nodes);

// Realized decrement: the mean scaled by a multiplicative factor
// 1 + noise_sigma * z with z a truncated standard normal keyed by
// (seed, epoch). Keying by epoch alone means every strategy facing the same
// epoch sees the same factor, so comparisons share one noise realization.
// Equals mean_run_delta when noise_sigma is 0.
double true_run_delta(const TruthParams& params, int epoch, int model, int nodes);

// Loss increase incurred by switching models; 0 for the identity, the
// configured penalty for listed pairs, and an error (infeasible transition)
// for unlisted pairs.
double true_change_delta(const TruthParams& params, int model_from, int model_to);

// Realized effect of enacting one action under true dynamics.
struct StepRealization {
    double delta_loss = 0.0;    // new_loss - old_loss after the >= 0 clip
    double delta_time = 0.0;
    double delta_energy = 0.0;
    double new_loss = 0.0;
};

// Applies switch penalty, run decrement, and step costs for one epoch.
// Throws RuntimeError when the action is infeasible under the cost tables or
// the truth has no parameters for the target combination.
StepRealization apply_action(const Scenario& s, const TruthParams& params, int epoch,
                             const State& state, const Action& action);

TruthParams parse_truth(const std::string& json_text);
TruthParams load_truth(const std::string& path);
std::string truth_to_json(const TruthParams& params);
void save_truth(const TruthParams& params, const std::string& path);

}  // namespace pact
