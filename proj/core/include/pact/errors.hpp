#pragma once

#include <stdexcept>
#include <string>

namespace pact {

// Raised when an input file or configuration value violates the schema.
// The message names the offending field path, e.g. "quantization.gamma_loss".
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for failures during planning or simulation that are not input
// validation problems (I/O errors, missing prediction rows, and so on).
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised by the exhaustive-search baseline when the node enumeration budget
// is exhausted. Carries the best complete-schedule energy found so far, or
// infinity when no complete schedule was seen before the budget ran out.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& msg, double best_energy_bound)
        : std::runtime_error(msg), best_energy_bound_(best_energy_bound) {}

    double best_energy_bound() const { return best_energy_bound_; }

private:
    double best_energy_bound_;
};

}  // namespace pact
