#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace assetflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (validation failures, bad JSON).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg, std::string json_path = {})
        : Error(json_path.empty() ? msg : msg + " (at " + json_path + ")"),
          path(std::move(json_path)) {}
    std::string path;
};

// State handed to a pure operation is outside its domain (NaN/Inf, bad index).
struct InvalidStateError : Error {
    using Error::Error;
};

// Total supply of an asset fell below the floor; dividing by it would be meaningless.
struct SingularSupplyError : Error {
    SingularSupplyError(int asset_index, double supply, double time = std::nan(""))
        : Error("singular supply on asset " + std::to_string(asset_index + 1) +
                " (T = " + std::to_string(supply) +
                (std::isnan(time) ? ")" : ") at t = " + std::to_string(time))),
          asset(asset_index), value(supply), t(time) {}
    int asset;
    double value;
    double t;
};

// Adaptive step size collapsed below the minimum; scenario is too stiff for the
// explicit method. Remedy: tighten tolerances or shorten sample_dt.
struct StepUnderflowError : Error {
    StepUnderflowError(double time, double step)
        : Error("step size underflow at t = " + std::to_string(time) +
                " (h = " + std::to_string(step) +
                "); tighten tolerances or reduce the scenario's rate constants"),
          t(time), h(step) {}
    double t;
    double h;
};

// Fundamental-equilibrium calibration condition cannot be met with the given totals.
struct CalibrationError : Error {
    using Error::Error;
};

// Iterative solver ran out of iterations / damping attempts.
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& msg, double best = std::nan(""))
        : Error(msg), best_residual(best) {}
    double best_residual;
};

}  // namespace assetflow
