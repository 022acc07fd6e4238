#pragma once

#include "pact/dynamics.hpp"
#include "pact/planner.hpp"
#include "pact/scenario.hpp"

namespace pact {

struct StrategyResult {
    Trajectory trajectory;
    // Infinity when no qualifying schedule exists, so comparisons treat
    // infeasible strategies as arbitrarily expensive.
    double total_energy = 0.0;
    bool feasible = false;
    long long candidates_evaluated = 0;
};

// Minimum-energy action sequence reaching the loss target within the time
// limit under true dynamics, by depth-first enumeration with
// branch-and-bound pruning (incumbent energy plus an admissible
// epochs-to-target bound). `budget` caps node expansions; exceeding it
// raises BudgetExceeded carrying the best complete-schedule energy found.
// max_epochs 0 derives the depth cap from the time grid.
StrategyResult brute_force_optimum(const Scenario& s, const TruthParams& truth,
                                   int max_epochs = 0, long long budget = 10000000);

// Fixed-order multi-phase schedule: models in decreasing size (ascending
// pruning ratio), each on its cheapest runnable node set, switch epochs
// chosen so per-phase loss improvements stay pairwise within `margin`
// relative difference; cheapest feasible qualifying schedule wins.
StrategyResult static_learn(const Scenario& s, const TruthParams& truth, double margin = 0.05,
                            int max_epochs = 0);

// Best schedule using at most one model switch: every ordered model pair on
// their cheapest runnable node sets, every switch epoch. Schedules that
// reach the target before the switch degenerate to single-model runs.
StrategyResult one_switch(const Scenario& s, const TruthParams& truth, int max_epochs = 0);

// Enacts a fixed action sequence under true dynamics, stopping early when
// the target is met or the next action would overrun the time limit.
Trajectory simulate_actions(const Scenario& s, const TruthParams& truth,
                            const std::vector<Action>& actions);

}  // namespace pact
