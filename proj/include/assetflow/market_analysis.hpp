#pragma once

#include <string>
#include <vector>

#include "assetflow/equilibrium.hpp"
#include "assetflow/integrator.hpp"

namespace assetflow {

// Maximum deviation of one asset's price from its initial value.
double excursion(const Trajectory& traj, int asset);

struct ExcursionReport {
    Vec perturbation;   // applied price offsets
    Vec excursions;     // per asset
    double e_max = 0.0;
    double e_agg = 0.0;  // root-sum-square
    Mat correlation;     // post-transient price correlation, unit diagonal
    bool ok = false;
    std::string error;
};

struct ExcursionSurface {
    std::vector<double> dp1, dp2;
    std::vector<ExcursionReport> nodes;  // row-major over (dp1, dp2)
    // Summary over successful nodes, per asset:
    Vec mean, median, stddev;
    Vec flatness;  // stddev / mean

    const ExcursionReport& at(size_t i1, size_t i2) const { return nodes[i1 * dp2.size() + i2]; }
};

struct SurfaceOptions {
    double horizon = 250.0;
    double transient_fraction = 0.5;
    double sample_dt = 0.25;
    IntegratorSettings integrator{};
};

// One integration per grid node, starting from the equilibrium with the first
// two assets' prices offset by (dp1, dp2).
ExcursionSurface excursion_surface(const ModelConfig& cfg, const EquilibriumPoint& base,
                                   const std::vector<double>& dp1_grid,
                                   const std::vector<double>& dp2_grid,
                                   const SurfaceOptions& opts = {});

struct ContagionReport {
    Mat gamma;            // response of asset i per unit shock to asset j; zero diagonal
    double shock_frac = 0.0;
    double horizon = 0.0;
    double window_fraction = 0.0;
    Vec baseline_stat;    // unshocked late-window max |P_i - Pa_i|
};

struct ContagionOptions {
    double horizon = 25.0;
    double window_fraction = 0.2;  // late window used for the response statistic
    double sample_dt = 0.05;
    IntegratorSettings integrator{};
};

// Late-window shock response relative to an unshocked baseline run, so any
// persistent cycle deviation common to both runs is differenced out.
ContagionReport contagion_matrix(const ModelConfig& cfg, const EquilibriumPoint& base,
                                 double shock_frac, const ContagionOptions& opts = {});

// (G_ij - G_ji) / (G_ij + G_ji); throws on a zero denominator.
double asymmetry_index(const Mat& gamma, int i, int j);

struct WealthSeries {
    std::vector<double> times;
    Mat wealth;        // sample x group
    Vec total;         // per sample
    Mat trading_flow;  // executed sell cash minus buy cash, per group
    Mat capital_gain;  // sum_i N dP/dt, per group
};

WealthSeries wealth_series(const ModelConfig& cfg, const Trajectory& traj);

}  // namespace assetflow
