#pragma once

#include <stdexcept>
#include <string>

namespace ibflow {

/// Bad or inconsistent user configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values appeared during time stepping (CLI exit code 3).
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, long step_index)
        : std::runtime_error(msg + " (step " + std::to_string(step_index) + ")"),
          step(step_index) {}
    long step;
};

/// Iterative solve did not reach its tolerance within the iteration budget.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double final_residual)
        : std::runtime_error(msg + " (residual " + std::to_string(final_residual) + ")"),
          residual(final_residual) {}
    double residual;
};

/// Analysis window too short or signal unusable for the requested statistic.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated precondition of an internal contract; indicates a caller bug.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

} // namespace ibflow
