#pragma once

#include <complex>
#include <vector>

#include "assetflow/equilibrium.hpp"

namespace assetflow {

enum class Stability { Stable, Marginal, Unstable };
enum class JacobianKind { Full, Reduced };

const char* to_string(Stability s);

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;  // sorted by descending real part
    JacobianKind kind = JacobianKind::Full;
    double zero_tol = 1e-7;
    int zero_modes = 0;           // count of |lambda| < zero_tol
    int expected_zero_modes = 0;  // conservation + manifold accounting
    bool zero_mode_mismatch = false;
    double leading = 0.0;  // max real part excluding zero modes
    Stability classification = Stability::Marginal;
};

inline constexpr double kZeroTol = 1e-7;
inline constexpr double kStabilityMargin = 1e-7;

// Central finite differences of the full rhs, step 1e-6 * max(1, |x_k|).
Mat jacobian_full(const ModelConfig& cfg, const EquilibriumPoint& eq);
Mat jacobian_full_at(const ModelConfig& cfg, const Vec& state);

// Finite-difference Jacobian of the (P, trend, value) sub-dynamics with cash
// and shares frozen at their equilibrium values.
Mat jacobian_reduced(const ModelConfig& cfg, const EquilibriumPoint& eq);
Mat jacobian_reduced_at(const ModelConfig& cfg, const Vec& state);

// Eigenvalues of a real square matrix with a residual sanity check on the
// recovered pairs.
std::vector<std::complex<double>> eigenvalues(const Mat& A);

// Zero modes of the full Jacobian at an equilibrium: m + 1 conserved totals
// plus the n - 1 cash-redistribution directions along the equilibrium manifold.
int expected_zero_modes_full(const ModelConfig& cfg);

SpectrumReport classify(std::vector<std::complex<double>> eigs, JacobianKind kind,
                        int expected_zero_modes, double zero_tol = kZeroTol,
                        double margin = kStabilityMargin);

SpectrumReport spectrum_full(const ModelConfig& cfg, const EquilibriumPoint& eq);
SpectrumReport spectrum_reduced(const ModelConfig& cfg, const EquilibriumPoint& eq);

struct RouthHurwitzResult {
    bool stable = false;
    double hopf_margin = 0.0;  // A1*A2 - A0 after monic normalization
};

// Stability of a3 x^3 + a2 x^2 + a1 x + a0 with a3 > 0.
RouthHurwitzResult routh_hurwitz_cubic(double a3, double a2, double a1, double a0);

}  // namespace assetflow
