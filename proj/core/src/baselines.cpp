#include "pact/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pact/errors.hpp"
#include "pact/graph.hpp"
#include "pact/rng.hpp"

namespace pact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int derive_epoch_cap(const Scenario& s, int max_epochs) {
    if (max_epochs > 0) {
        return max_epochs;
    }
    double min_run_time = kInf;
    for (const auto& [key, entry] : s.costs.run) {
        if (entry.feasible()) {
            min_run_time = std::min(min_run_time, *entry.time);
        }
    }
    if (min_run_time == kInf) {
        return 1;
    }
    return static_cast<int>(s.constraints.time_limit / min_run_time) + 1;
}

StrategyResult infeasible_result(long long candidates) {
    StrategyResult r;
    r.total_energy = kInf;
    r.feasible = false;
    r.candidates_evaluated = candidates;
    r.trajectory.outcome = Outcome::NO_FEASIBLE_PATH;
    return r;
}

StrategyResult result_from_actions(const Scenario& s, const TruthParams& truth,
                                   const std::vector<Action>& actions, long long candidates) {
    StrategyResult r;
    r.trajectory = simulate_actions(s, truth, actions);
    r.feasible = r.trajectory.outcome == Outcome::TARGET_REACHED;
    r.total_energy = r.feasible ? r.trajectory.total_energy : kInf;
    r.candidates_evaluated = candidates;
    return r;
}

// Magnitude of the largest realized per-epoch loss decrease any runnable
// pair can deliver at `epoch`; admissible because realized noise factors are
// bounded by the truncation cut.
double max_drop_at(const Scenario& s, const TruthParams& truth, int epoch) {
    double noise_headroom = 1.0 + truth.noise_sigma * kNoiseCut;
    double best = 0.0;
    for (const auto& [key, entry] : s.costs.run) {
        if (!entry.feasible()) {
            continue;
        }
        auto it = truth.run_params.find(key);
        if (it == truth.run_params.end()) {
            continue;
        }
        best = std::max(best, -mean_run_delta(truth, epoch, key.first, key.second) *
                                  noise_headroom);
    }
    return best;
}

struct OptimumSearch {
    const Scenario& s;
    const TruthParams& truth;
    int epoch_cap;
    long long budget;
    long long expansions = 0;

    double min_pair_energy = kInf;
    std::vector<double> drop_prefix;           // drop_prefix[k] = best drop over epochs < k
    std::vector<std::vector<Action>> actions_from;  // index = from pair
    int num_nodes = 0;

    double best_energy = kInf;
    std::vector<Action> best_actions;
    std::vector<Action> current;

    OptimumSearch(const Scenario& scenario, const TruthParams& dynamics, int cap,
                  long long max_expansions)
        : s(scenario), truth(dynamics), epoch_cap(cap), budget(max_expansions) {
        for (const auto& [key, entry] : s.costs.run) {
            if (entry.feasible()) {
                min_pair_energy = std::min(min_pair_energy, *entry.energy);
            }
        }
        drop_prefix.resize(epoch_cap + 1, 0.0);
        for (int k = 0; k < epoch_cap; ++k) {
            drop_prefix[k + 1] = drop_prefix[k] + max_drop_at(s, truth, k);
        }
        num_nodes = static_cast<int>(s.node_sets.size());
        actions_from.resize(s.models.size() * s.node_sets.size());
        for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
            for (std::size_t ni = 0; ni < s.node_sets.size(); ++ni) {
                State from;
                from.model = s.models[mi].id;
                from.nodes = s.node_sets[ni].id;
                actions_from[mi * s.node_sets.size() + ni] = available_actions(s, from);
            }
        }
    }

    // Least additional energy any completion can cost from (loss, epoch):
    // the number of epochs needed if every one delivered the best possible
    // drop of its slot, each billed at the cheapest per-epoch energy.
    double completion_bound(double loss, int epoch) const {
        double needed = loss - s.constraints.loss_target - kTargetEps;
        if (needed <= 0.0) {
            return 0.0;
        }
        auto it = std::lower_bound(drop_prefix.begin() + epoch + 1, drop_prefix.end(),
                                   drop_prefix[epoch] + needed);
        if (it == drop_prefix.end()) {
            return kInf;  // the target is out of reach within the depth cap
        }
        return static_cast<double>(it - drop_prefix.begin() - epoch) * min_pair_energy;
    }

    void search(int model_idx, int nodes_idx, double loss, double elapsed, double energy,
                int epoch) {
        if (loss_target_met(loss, s.constraints.loss_target)) {
            if (energy < best_energy) {
                best_energy = energy;
                best_actions = current;
            }
            return;
        }
        if (epoch >= epoch_cap) {
            return;
        }
        if (++expansions > budget) {
            throw BudgetExceeded("exhaustive search exceeded the enumeration budget of " +
                                     std::to_string(budget) + " expansions",
                                 best_energy);
        }
        if (energy + completion_bound(loss, epoch) >= best_energy) {
            return;
        }
        State cur;
        cur.model = s.models[model_idx].id;
        cur.nodes = s.node_sets[nodes_idx].id;
        cur.loss = loss;
        cur.elapsed = elapsed;
        cur.epoch = epoch;
        for (const Action& a : actions_from[model_idx * num_nodes + nodes_idx]) {
            auto cost = step_cost(s, cur, a);
            if (!within_time(elapsed + cost->delta_time, s.constraints.time_limit)) {
                continue;
            }
            double change = true_change_delta(truth, cur.model, a.next_model);
            double run = true_run_delta(truth, epoch, a.next_model, a.next_nodes);
            double new_loss = std::max(0.0, loss + change + run);
            current.push_back(a);
            search(s.model_index(a.next_model), s.nodes_index(a.next_nodes), new_loss,
                   elapsed + cost->delta_time, energy + cost->delta_energy, epoch + 1);
            current.pop_back();
        }
    }
};

}  // namespace

Trajectory simulate_actions(const Scenario& s, const TruthParams& truth,
                            const std::vector<Action>& actions) {
    Trajectory t;
    State cur;
    cur.loss = s.constraints.initial_loss;
    cur.model = s.start.next_model;
    cur.nodes = s.start.next_nodes;
    t.final_loss = cur.loss;

    for (const Action& a : actions) {
        if (loss_target_met(cur.loss, s.constraints.loss_target)) {
            break;
        }
        auto cost = step_cost(s, cur, a);
        if (!cost) {
            throw RuntimeError("simulate_actions: infeasible action (" +
                               std::to_string(a.next_model) + ", " +
                               std::to_string(a.next_nodes) + ") at epoch " +
                               std::to_string(cur.epoch));
        }
        if (!within_time(cur.elapsed + cost->delta_time, s.constraints.time_limit)) {
            t.outcome = Outcome::TIME_EXCEEDED;
            return t;
        }
        StepRealization step = apply_action(s, truth, cur.epoch, cur, a);
        TrajectoryRecord r;
        r.epoch = cur.epoch;
        r.model = cur.model;
        r.nodes = cur.nodes;
        r.action_model = a.next_model;
        r.action_nodes = a.next_nodes;
        r.delta_loss = step.delta_loss;
        r.delta_time = step.delta_time;
        r.delta_energy = step.delta_energy;
        r.cum_time = cur.elapsed + step.delta_time;
        r.cum_energy = t.total_energy + step.delta_energy;
        r.loss = step.new_loss;
        t.records.push_back(r);

        if (a.next_model != cur.model && t.first_switch_epoch == INT_MAX) {
            t.first_switch_epoch = cur.epoch;
        }
        cur.loss = step.new_loss;
        cur.elapsed += step.delta_time;
        cur.model = a.next_model;
        cur.nodes = a.next_nodes;
        cur.epoch += 1;
        t.total_time = cur.elapsed;
        t.total_energy += step.delta_energy;
        t.final_loss = cur.loss;
        t.epochs = cur.epoch;
    }
    t.outcome = loss_target_met(cur.loss, s.constraints.loss_target) &&
                        within_time(cur.elapsed, s.constraints.time_limit)
                    ? Outcome::TARGET_REACHED
                    : Outcome::NO_FEASIBLE_PATH;
    return t;
}

StrategyResult brute_force_optimum(const Scenario& s, const TruthParams& truth, int max_epochs,
                                   long long budget) {
    int cap = derive_epoch_cap(s, max_epochs);
    OptimumSearch search(s, truth, cap, budget);
    search.search(s.model_index(s.start.next_model), s.nodes_index(s.start.next_nodes),
                  s.constraints.initial_loss, 0.0, 0.0, 0);
    if (search.best_energy == kInf) {
        return infeasible_result(search.expansions);
    }
    return result_from_actions(s, truth, search.best_actions, search.expansions);
}

namespace {

// Cheapest runnable node set per model; nullopt when none is runnable.
std::optional<int> cheapest_nodes_for(const Scenario& s, int model_id) {
    std::optional<int> best;
    double best_energy = kInf;
    for (const auto& n : s.node_sets) {
        auto rc = s.run_cost(model_id, n.id);
        if (rc && rc->delta_energy < best_energy) {
            best_energy = rc->delta_energy;
            best = n.id;
        }
    }
    return best;
}

// Models in decreasing size: ascending pruning ratio, ties by id.
std::vector<int> phase_model_order(const Scenario& s) {
    std::vector<const ModelProfile*> order;
    for (const auto& m : s.models) {
        order.push_back(&m);
    }
    std::sort(order.begin(), order.end(), [](const ModelProfile* a, const ModelProfile* b) {
        if (a->pruning_ratio != b->pruning_ratio) {
            return a->pruning_ratio < b->pruning_ratio;
        }
        return a->id < b->id;
    });
    std::vector<int> ids;
    for (const ModelProfile* m : order) {
        ids.push_back(m->id);
    }
    return ids;
}

struct CandidateEval {
    bool reached = false;
    double energy = 0.0;
    std::vector<Action> actions;
    std::vector<double> improvements;  // per phase, run decrements only
};

// Runs the phased schedule until the target, a time breach, an infeasible
// step, or the epoch cap. switch_epochs are the global epochs at which each
// later phase begins; the last phase runs open-ended.
CandidateEval evaluate_phases(const Scenario& s, const TruthParams& truth,
                              const std::vector<std::pair<int, int>>& phase_pairs,
                              const std::vector<int>& switch_epochs, int epoch_cap) {
    CandidateEval eval;
    eval.improvements.assign(phase_pairs.size(), 0.0);

    State cur;
    cur.loss = s.constraints.initial_loss;
    cur.model = s.start.next_model;
    cur.nodes = s.start.next_nodes;
    std::size_t phase = 0;
    for (int epoch = 0; epoch < epoch_cap; ++epoch) {
        if (loss_target_met(cur.loss, s.constraints.loss_target)) {
            break;
        }
        while (phase + 1 < phase_pairs.size() && epoch >= switch_epochs[phase]) {
            ++phase;
        }
        Action a{phase_pairs[phase].first, phase_pairs[phase].second};
        auto cost = step_cost(s, cur, a);
        if (!cost || !within_time(cur.elapsed + cost->delta_time, s.constraints.time_limit)) {
            return eval;  // not reached
        }
        double run = true_run_delta(truth, epoch, a.next_model, a.next_nodes);
        StepRealization step = apply_action(s, truth, epoch, cur, a);
        eval.improvements[phase] += std::max(0.0, -run);
        eval.energy += step.delta_energy;
        eval.actions.push_back(a);
        cur.loss = step.new_loss;
        cur.elapsed += step.delta_time;
        cur.model = a.next_model;
        cur.nodes = a.next_nodes;
    }
    eval.reached = loss_target_met(cur.loss, s.constraints.loss_target);
    return eval;
}

bool improvements_within_margin(const std::vector<double>& improvements, double margin) {
    for (std::size_t i = 0; i < improvements.size(); ++i) {
        for (std::size_t j = i + 1; j < improvements.size(); ++j) {
            double hi = std::max(improvements[i], improvements[j]);
            double diff = std::abs(improvements[i] - improvements[j]);
            if (hi <= 0.0) {
                continue;  // both phases idle, trivially similar
            }
            if (diff / hi > margin + 1e-12) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

StrategyResult static_learn(const Scenario& s, const TruthParams& truth, double margin,
                            int max_epochs) {
    if (s.models.size() < 2) {
        throw RuntimeError("static_learn requires at least two models");
    }
    int cap = derive_epoch_cap(s, max_epochs);
    std::vector<int> order = phase_model_order(s);
    std::vector<std::pair<int, int>> phase_pairs;
    for (int model_id : order) {
        auto nodes = cheapest_nodes_for(s, model_id);
        if (!nodes) {
            // A model with no runnable node set cannot take a phase; the
            // fixed-order schedule family is empty.
            return infeasible_result(0);
        }
        phase_pairs.emplace_back(model_id, *nodes);
    }

    long long candidates = 0;
    double best_energy = kInf;
    std::vector<Action> best_actions;
    std::vector<int> switches(phase_pairs.size() - 1, 0);

    // Nondecreasing switch-epoch vectors, enumerated depth first in
    // lexicographic order. A switch scheduled past the stopping epoch of the
    // preceding phases cannot alter the realized episode, so each level is
    // bounded by its own prefix rollout; the stopping epoch itself stays in
    // range as the representative of every later choice.
    std::function<void(std::size_t, int)> enumerate = [&](std::size_t level, int min_epoch) {
        if (level == switches.size()) {
            ++candidates;
            CandidateEval eval = evaluate_phases(s, truth, phase_pairs, switches, cap);
            if (eval.reached && improvements_within_margin(eval.improvements, margin) &&
                eval.energy < best_energy) {
                best_energy = eval.energy;
                best_actions = eval.actions;
            }
            return;
        }
        std::vector<std::pair<int, int>> prefix(phase_pairs.begin(),
                                                phase_pairs.begin() + level + 1);
        std::vector<int> prefix_switches(switches.begin(), switches.begin() + level);
        CandidateEval probe = evaluate_phases(s, truth, prefix, prefix_switches, cap);
        int bound = std::min(static_cast<int>(probe.actions.size()), cap);
        for (int k = min_epoch; k <= bound; ++k) {
            switches[level] = k;
            enumerate(level + 1, k);
        }
    };
    enumerate(0, 0);

    if (best_energy == kInf) {
        return infeasible_result(candidates);
    }
    return result_from_actions(s, truth, best_actions, candidates);
}

StrategyResult one_switch(const Scenario& s, const TruthParams& truth, int max_epochs) {
    if (s.models.size() < 2) {
        throw RuntimeError("one_switch requires at least two models");
    }
    int cap = derive_epoch_cap(s, max_epochs);

    long long candidates = 0;
    double best_energy = kInf;
    std::vector<Action> best_actions;
    for (const auto& m1 : s.models) {
        auto n1 = cheapest_nodes_for(s, m1.id);
        if (!n1) {
            continue;
        }
        // The first phase alone stops at some epoch regardless of the planned
        // switch; larger switch epochs replay that episode, so only the
        // smaller ones need their own rollout. The count still reports the
        // full (pair, switch epoch) candidate space.
        std::vector<std::pair<int, int>> solo{{m1.id, *n1}};
        CandidateEval probe = evaluate_phases(s, truth, solo, {}, cap);
        int bound = std::min(static_cast<int>(probe.actions.size()), cap);
        for (const auto& m2 : s.models) {
            if (m2.id == m1.id) {
                continue;
            }
            auto n2 = cheapest_nodes_for(s, m2.id);
            if (!n2) {
                continue;
            }
            std::vector<std::pair<int, int>> phases{{m1.id, *n1}, {m2.id, *n2}};
            candidates += cap;
            for (int k1 = 1; k1 <= bound; ++k1) {
                std::vector<int> switches{k1};
                CandidateEval eval = evaluate_phases(s, truth, phases, switches, cap);
                if (eval.reached && eval.energy < best_energy) {
                    best_energy = eval.energy;
                    best_actions = eval.actions;
                }
            }
        }
    }
    if (best_energy == kInf) {
        return infeasible_result(candidates);
    }
    return result_from_actions(s, truth, best_actions, candidates);
}

}  // namespace pact
