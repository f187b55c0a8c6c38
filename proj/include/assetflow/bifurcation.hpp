#pragma once

#include <optional>
#include <string>
#include <vector>

#include "assetflow/integrator.hpp"
#include "assetflow/spectral.hpp"

namespace assetflow {

struct CycleMetrics {
    bool oscillatory = false;
    double amplitude = 0.0;  // half peak-to-trough over the window
    std::optional<double> period;
    double p_max = 0.0;
    double p_min = 0.0;
    int peaks = 0;
};

// Peak-based cycle metrology on a post-transient window. Throws when the signal
// clearly oscillates but covers fewer than three peaks.
CycleMetrics cycle_metrics(const std::vector<double>& times, const std::vector<double>& values);
CycleMetrics cycle_metrics(const Trajectory& traj, int asset);

struct HopfPoint {
    double q_crit = 0.0;
    double omega = 0.0;           // |Im| of the critical pair
    double period = 0.0;          // 2*pi/omega
    double transversality = 0.0;  // finite-difference d Re(lambda) / d mu
    double leading_lo = 0.0;
    double leading_hi = 0.0;
};

// Bisection on the leading real part of the reduced Jacobian at the fundamental
// equilibrium. Errors when the bracket has no sign change or the crossing pair
// is purely real (fold, not Hopf).
HopfPoint find_hopf_threshold(const ModelConfig& cfg, const std::string& param, double lo,
                              double hi, double tol, const Vec& cash_split);

struct BifurcationOptions {
    double perturb_frac = 0.01;       // initial +1% kick on the first asset's price
    double horizon = 0.0;             // 0 -> 25 expected periods
    double transient_fraction = 0.5;  // discarded before metrology
    int samples_per_period = 64;
    int metric_asset = 0;
    IntegratorSettings integrator{};  // tolerances reused; time fields overwritten
};

struct ScanNode {
    double value = 0.0;
    double leading_re = 0.0;
    double leading_im = 0.0;
    Stability classification = Stability::Marginal;
    CycleMetrics metrics;
    bool simulated = false;
    std::string error;
};

struct HopfScanResult {
    std::string param;
    std::vector<ScanNode> nodes;
    bool crossing_found = false;
    std::optional<double> q_crit;
};

// Per node: reduced-spectrum classification plus a long-horizon simulation from
// a perturbed fundamental equilibrium; nodes run concurrently.
HopfScanResult bifurcation_scan(const ModelConfig& cfg, const std::string& param,
                                const std::vector<double>& grid, const Vec& cash_split,
                                const BifurcationOptions& opts = {});

}  // namespace assetflow
