#pragma once

#include <optional>
#include <vector>

#include "assetflow/model.hpp"

namespace assetflow {

enum class EquilibriumKind { Fundamental, Manifold };

struct EquilibriumPoint {
    Vec state;
    double residual = 0.0;  // max-norm of the full rhs at the point
    EquilibriumKind kind = EquilibriumKind::Fundamental;
    Vec cash;  // cash distribution used to construct the point
};

// P = Pa, zero sentiments; share holdings solved from the calibration condition
//   k[j][i](0,0) M_j = k~[j][i](0,0) N[j][i] Pa_i.
// Throws CalibrationError when the implied totals miss N0.
EquilibriumPoint fundamental_equilibrium(const ModelConfig& cfg, const Vec& cash_split,
                                         double total_tol = 1e-6);

// Damped Newton on (P, N mod conservation) for a fixed cash distribution;
// value sentiments substituted by their equilibrium closed form.
EquilibriumPoint solve_manifold_point(const ModelConfig& cfg, const Vec& cash_split,
                                      const std::optional<EquilibriumPoint>& guess = {},
                                      double tol = 1e-10, int max_iter = 100);

struct ManifoldRecord {
    Vec cash;
    Vec price;  // equilibrium prices per asset
    double residual = 0.0;
    bool converged = false;
    bool stable = false;
    double leading = 0.0;  // leading nonzero eigenvalue real part of the full Jacobian
    EquilibriumPoint point;
    std::string error;
};

// Continuation over a list of cash distributions; each node warm-starts from the
// previous solution. Non-convergent nodes are recorded and the scan continues.
std::vector<ManifoldRecord> manifold_scan(const ModelConfig& cfg,
                                          const std::vector<Vec>& cash_grid,
                                          bool classify_stability = true);

// Grid helpers: n = 2 sweeps the first group's cash share; n > 2 samples the
// simplex on a regular barycentric grid.
std::vector<Vec> cash_grid_two_groups(const ModelConfig& cfg, int points, double lo_frac = 0.01,
                                      double hi_frac = 0.99);
std::vector<Vec> cash_grid_simplex(const ModelConfig& cfg, int subdivisions);

}  // namespace assetflow
