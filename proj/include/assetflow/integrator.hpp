#pragma once

#include <functional>
#include <vector>

#include "assetflow/model.hpp"

namespace assetflow {

struct IntegratorSettings {
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;
    double t0 = 0.0;
    double t_end = 0.0;
    double sample_dt = 0.0;
    long max_steps = 20'000'000;
    double min_step = 0.0;  // 0 -> 1e-13 * (t_end - t0)

    void validate() const;
};

struct TrajectoryDiagnostics {
    long steps = 0;
    long rejected = 0;
    double max_budget_excess = 0.0;  // largest sum_i k - 1 seen at samples
};

// Dense, evenly sampled solution of one integration run.
struct Trajectory {
    StateLayout layout;
    std::vector<double> times;
    std::vector<Vec> states;
    TrajectoryDiagnostics diagnostics;

    size_t size() const { return times.size(); }
    std::vector<double> series(int state_index) const;
    std::vector<double> price_series(int asset) const { return series(layout.price(asset)); }
};

using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

// Adaptive Dormand-Prince 5(4) with PI step control; output is interpolated
// onto the uniform sample grid with the method's 4th-order interpolant.
Trajectory integrate_ode(const OdeRhs& f, const Vec& x0, const IntegratorSettings& settings,
                         StateLayout layout = {});

Trajectory integrate(const ModelConfig& cfg, const Vec& x0, const IntegratorSettings& settings);

// Runs the full horizon, discards the leading fraction of samples.
Trajectory integrate_to_attractor(const ModelConfig& cfg, const Vec& x0,
                                  const IntegratorSettings& settings, double transient_fraction);

// Max absolute drift of the conserved totals along a trajectory.
struct DriftReport {
    double cash = 0.0;          // max |sum_j M_j - M0|
    Vec shares;                 // per asset, max |sum_j N[j][i] - N0_i|
    double max() const { return shares.size() ? std::max(cash, shares.maxCoeff()) : cash; }
};

DriftReport drift_monitor(const ModelConfig& cfg, const Trajectory& traj);

}  // namespace assetflow
