#include "assetflow/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace assetflow {

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Marginal: return "marginal";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

namespace {

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

}  // namespace

Mat jacobian_full_at(const ModelConfig& cfg, const Vec& state) {
    const int d = static_cast<int>(state.size());
    Mat J(d, d);
    Vec xp = state, xm = state;
    for (int k = 0; k < d; ++k) {
        const double h = fd_step(state(k));
        xp(k) = state(k) + h;
        xm(k) = state(k) - h;
        J.col(k) = (rhs(cfg, xp) - rhs(cfg, xm)) / (2.0 * h);
        xp(k) = state(k);
        xm(k) = state(k);
    }
    return J;
}

Mat jacobian_full(const ModelConfig& cfg, const EquilibriumPoint& eq) {
    if (eq.residual >= 1e-8)
        throw InvalidStateError("jacobian_full: equilibrium residual " +
                                std::to_string(eq.residual) + " exceeds 1e-8");
    return jacobian_full_at(cfg, eq.state);
}

Mat jacobian_reduced_at(const ModelConfig& cfg, const Vec& state) {
    const StateLayout lay = cfg.layout();
    const int mn = cfg.m * cfg.n;
    const int d = cfg.m + 2 * mn;

    // Reduced coordinate r -> index in the full state vector.
    std::vector<int> map(d);
    for (int i = 0; i < cfg.m; ++i) map[i] = lay.price(i);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i) {
            map[cfg.m + j * cfg.m + i] = lay.trend(j, i);
            map[cfg.m + mn + j * cfg.m + i] = lay.value(j, i);
        }

    Mat J(d, d);
    Vec xp = state, xm = state;
    Vec fp(lay.size()), fm(lay.size());
    for (int k = 0; k < d; ++k) {
        const int fk = map[k];
        const double h = fd_step(state(fk));
        xp(fk) = state(fk) + h;
        xm(fk) = state(fk) - h;
        rhs(cfg, xp, fp);
        rhs(cfg, xm, fm);
        for (int r = 0; r < d; ++r) J(r, k) = (fp(map[r]) - fm(map[r])) / (2.0 * h);
        xp(fk) = state(fk);
        xm(fk) = state(fk);
    }
    return J;
}

Mat jacobian_reduced(const ModelConfig& cfg, const EquilibriumPoint& eq) {
    if (eq.kind != EquilibriumKind::Fundamental)
        throw InvalidStateError("jacobian_reduced requires a fundamental equilibrium");
    if (eq.residual >= 1e-8)
        throw InvalidStateError("jacobian_reduced: equilibrium residual " +
                                std::to_string(eq.residual) + " exceeds 1e-8");
    return jacobian_reduced_at(cfg, eq.state);
}

std::vector<std::complex<double>> eigenvalues(const Mat& A) {
    if (A.rows() != A.cols()) throw InvalidStateError("eigenvalues: matrix must be square");
    if (!A.allFinite()) throw InvalidStateError("eigenvalues: matrix has non-finite entries");

    Eigen::EigenSolver<Mat> solver(A, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("eigenvalue iteration did not converge");

    const double scale = std::max(A.norm(), 1e-300);
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    const Eigen::MatrixXcd Ac = A.cast<std::complex<double>>();
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        const Eigen::VectorXcd v = vecs.col(k);
        const double res = (Ac * v - vals(k) * v).norm() / v.norm();
        if (res > 1e-8 * scale)
            throw ConvergenceError("eigenpair residual " + std::to_string(res / scale) +
                                   " exceeds 1e-8 * |A|");
    }

    std::vector<std::complex<double>> out(vals.data(), vals.data() + vals.size());
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    return out;
}

int expected_zero_modes_full(const ModelConfig& cfg) { return cfg.m + cfg.n; }

SpectrumReport classify(std::vector<std::complex<double>> eigs, JacobianKind kind,
                        int expected_zero_modes, double zero_tol, double margin) {
    SpectrumReport rep;
    rep.kind = kind;
    rep.zero_tol = zero_tol;
    rep.expected_zero_modes = expected_zero_modes;
    rep.eigenvalues = std::move(eigs);

    double leading = -std::numeric_limits<double>::infinity();
    for (const auto& ev : rep.eigenvalues) {
        if (std::abs(ev) < zero_tol) {
            ++rep.zero_modes;
            continue;
        }
        leading = std::max(leading, ev.real());
    }
    rep.leading = std::isfinite(leading) ? leading : 0.0;
    rep.zero_mode_mismatch = rep.zero_modes != expected_zero_modes;

    if (rep.leading < -margin)
        rep.classification = Stability::Stable;
    else if (rep.leading <= margin)
        rep.classification = Stability::Marginal;
    else
        rep.classification = Stability::Unstable;
    return rep;
}

SpectrumReport spectrum_full(const ModelConfig& cfg, const EquilibriumPoint& eq) {
    return classify(eigenvalues(jacobian_full(cfg, eq)), JacobianKind::Full,
                    expected_zero_modes_full(cfg));
}

SpectrumReport spectrum_reduced(const ModelConfig& cfg, const EquilibriumPoint& eq) {
    return classify(eigenvalues(jacobian_reduced(cfg, eq)), JacobianKind::Reduced, 0);
}

RouthHurwitzResult routh_hurwitz_cubic(double a3, double a2, double a1, double a0) {
    if (!(a3 > 0.0)) throw ConfigError("routh_hurwitz_cubic requires a3 > 0");
    const double A2 = a2 / a3, A1 = a1 / a3, A0 = a0 / a3;
    RouthHurwitzResult res;
    res.hopf_margin = A1 * A2 - A0;
    res.stable = A2 > 0.0 && A1 > 0.0 && A0 > 0.0 && res.hopf_margin > 0.0;
    return res;
}

}  // namespace assetflow
