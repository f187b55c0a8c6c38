#include "assetflow/equilibrium.hpp"

#include <Eigen/LU>
#include <cmath>
#include <functional>
#include <sstream>

#include "assetflow/spectral.hpp"

namespace assetflow {

namespace {

void check_cash_split(const ModelConfig& cfg, const Vec& cash_split) {
    if (cash_split.size() != cfg.n)
        throw ConfigError("cash distribution must have n entries");
    if (cash_split.minCoeff() < 0.0)
        throw ConfigError("cash distribution entries must be >= 0");
    if (std::abs(cash_split.sum() - cfg.M0) > 1e-9 * std::max(1.0, cfg.M0))
        throw ConfigError("cash distribution must sum to M0");
}

// Equilibrium state with zero trend sentiment and the value-sentiment closed form.
Vec assemble_state(const ModelConfig& cfg, const Vec& prices, const Vec& cash, const Mat& shares) {
    const StateLayout lay = cfg.layout();
    Vec x = Vec::Zero(lay.size());
    for (int i = 0; i < cfg.m; ++i) x(lay.price(i)) = prices(i);
    for (int j = 0; j < cfg.n; ++j) x(lay.cash(j)) = cash(j);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i) {
            x(lay.shares(j, i)) = shares(j, i);
            x(lay.value(j, i)) = cfg.q2(j, i) * (1.0 - prices(i) / cfg.Pa(i));
        }
    return x;
}

double rhs_max_norm(const ModelConfig& cfg, const Vec& state) {
    return rhs(cfg, state).cwiseAbs().maxCoeff();
}

}  // namespace

EquilibriumPoint fundamental_equilibrium(const ModelConfig& cfg, const Vec& cash_split,
                                         double total_tol) {
    check_cash_split(cfg, cash_split);
    const Vec zero = Vec::Zero(cfg.m);

    Mat shares(cfg.n, cfg.m);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i) {
            const double k0 = buy_rate(cfg, j, i, zero, zero);
            const double kt0 = sell_rate(cfg, j, i, zero, zero, cfg.Pa(i));
            if (kt0 <= kSupplyFloor)
                throw CalibrationError("zero sell rate at zero sentiment for group " +
                                       std::to_string(j + 1) + ", asset " + std::to_string(i + 1));
            shares(j, i) = k0 * cash_split(j) / (kt0 * cfg.Pa(i));
        }

    for (int i = 0; i < cfg.m; ++i) {
        const double total = shares.col(i).sum();
        if (std::abs(total - cfg.N0(i)) > total_tol * std::max(1.0, cfg.N0(i))) {
            std::ostringstream os;
            os << "calibration infeasible: implied total shares of asset " << i + 1 << " are "
               << total << " but N0 = " << cfg.N0(i);
            throw CalibrationError(os.str());
        }
    }

    EquilibriumPoint eq;
    eq.kind = EquilibriumKind::Fundamental;
    eq.cash = cash_split;
    eq.state = assemble_state(cfg, cfg.Pa, cash_split, shares);
    eq.residual = rhs_max_norm(cfg, eq.state);
    return eq;
}

namespace {

// Unknowns for the manifold solve: prices, then shares of groups 0..n-2
// (the last group's holdings are eliminated by share conservation).
struct ManifoldProblem {
    const ModelConfig& cfg;
    const Vec& cash;

    int unknowns() const { return cfg.m + cfg.m * (cfg.n - 1); }

    Vec pack(const Vec& prices, const Mat& shares) const {
        Vec u(unknowns());
        u.head(cfg.m) = prices;
        int at = cfg.m;
        for (int j = 0; j + 1 < cfg.n; ++j)
            for (int i = 0; i < cfg.m; ++i) u(at++) = shares(j, i);
        return u;
    }

    void unpack(const Vec& u, Vec& prices, Mat& shares) const {
        prices = u.head(cfg.m);
        shares.resize(cfg.n, cfg.m);
        int at = cfg.m;
        for (int j = 0; j + 1 < cfg.n; ++j)
            for (int i = 0; i < cfg.m; ++i) shares(j, i) = u(at++);
        for (int i = 0; i < cfg.m; ++i) {
            double rest = cfg.N0(i);
            for (int j = 0; j + 1 < cfg.n; ++j) rest -= shares(j, i);
            shares(cfg.n - 1, i) = rest;
        }
    }

    // The m*n trade-balance equations k M = k~ N P with sentiments at their
    // equilibrium values.
    Vec residual(const Vec& u) const {
        Vec prices;
        Mat shares;
        unpack(u, prices, shares);
        if (prices.minCoeff() <= 0.0) throw InvalidStateError("non-positive price iterate");

        Vec r(cfg.m * cfg.n);
        const Vec trend = Vec::Zero(cfg.m);
        Vec value_j(cfg.m);
        for (int j = 0; j < cfg.n; ++j) {
            for (int i = 0; i < cfg.m; ++i)
                value_j(i) = cfg.q2(j, i) * (1.0 - prices(i) / cfg.Pa(i));
            for (int i = 0; i < cfg.m; ++i) {
                const double k = buy_rate(cfg, j, i, trend, value_j);
                const double kt = sell_rate(cfg, j, i, trend, value_j, prices(i));
                r(j * cfg.m + i) = k * cash(j) - kt * shares(j, i) * prices(i);
            }
        }
        return r;
    }

    Mat jacobian(const Vec& u) const {
        const int d = unknowns();
        Mat J(cfg.m * cfg.n, d);
        Vec up = u, um = u;
        for (int k = 0; k < d; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(u(k)));
            up(k) = u(k) + h;
            um(k) = u(k) - h;
            J.col(k) = (residual(up) - residual(um)) / (2.0 * h);
            up(k) = u(k);
            um(k) = u(k);
        }
        return J;
    }
};

}  // namespace

EquilibriumPoint solve_manifold_point(const ModelConfig& cfg, const Vec& cash_split,
                                      const std::optional<EquilibriumPoint>& guess, double tol,
                                      int max_iter) {
    check_cash_split(cfg, cash_split);
    const ManifoldProblem prob{cfg, cash_split};
    const StateLayout lay = cfg.layout();

    Vec prices;
    Mat shares(cfg.n, cfg.m);
    if (guess) {
        prices = guess->state.head(cfg.m);
        if (prices.minCoeff() <= 0.0) throw ConfigError("guess must have positive prices");
        for (int j = 0; j < cfg.n; ++j)
            for (int i = 0; i < cfg.m; ++i) shares(j, i) = guess->state(lay.shares(j, i));
    } else {
        prices = cfg.Pa;
        for (int j = 0; j < cfg.n; ++j)
            for (int i = 0; i < cfg.m; ++i) shares(j, i) = cfg.N0(i) / cfg.n;
    }

    Vec u = prob.pack(prices, shares);
    Vec r = prob.residual(u);
    double best = r.cwiseAbs().maxCoeff();

    for (int it = 0; it < max_iter && best >= tol; ++it) {
        const Mat J = prob.jacobian(u);
        const Vec step = J.fullPivLu().solve(r);

        double lambda = 1.0;
        bool improved = false;
        for (int damp = 0; damp < 30; ++damp, lambda *= 0.5) {
            const Vec u_try = u - lambda * step;
            try {
                const Vec r_try = prob.residual(u_try);
                const double norm_try = r_try.cwiseAbs().maxCoeff();
                if (norm_try < best) {
                    u = u_try;
                    r = r_try;
                    best = norm_try;
                    improved = true;
                    break;
                }
            } catch (const InvalidStateError&) {
                // negative-price iterate: keep damping
            }
        }
        if (!improved)
            throw ConvergenceError("manifold solve stalled (best residual " +
                                       std::to_string(best) + ")",
                                   best);
    }
    if (best >= tol)
        throw ConvergenceError(
            "manifold solve did not converge (best residual " + std::to_string(best) + ")", best);

    prob.unpack(u, prices, shares);
    EquilibriumPoint eq;
    eq.kind = EquilibriumKind::Manifold;
    eq.cash = cash_split;
    eq.state = assemble_state(cfg, prices, cash_split, shares);
    eq.residual = rhs_max_norm(cfg, eq.state);
    return eq;
}

std::vector<ManifoldRecord> manifold_scan(const ModelConfig& cfg,
                                          const std::vector<Vec>& cash_grid,
                                          bool classify_stability) {
    std::vector<ManifoldRecord> out;
    out.reserve(cash_grid.size());
    std::optional<EquilibriumPoint> warm;

    for (const Vec& cash : cash_grid) {
        ManifoldRecord rec;
        rec.cash = cash;
        try {
            EquilibriumPoint eq = solve_manifold_point(cfg, cash, warm);
            warm = eq;
            rec.price = eq.state.head(cfg.m);
            rec.residual = eq.residual;
            rec.converged = true;
            if (classify_stability) {
                const SpectrumReport rep = spectrum_full(cfg, eq);
                rec.stable = rep.classification == Stability::Stable;
                rec.leading = rep.leading;
            }
            rec.point = std::move(eq);
        } catch (const Error& e) {
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Vec> cash_grid_two_groups(const ModelConfig& cfg, int points, double lo_frac,
                                      double hi_frac) {
    if (cfg.n != 2) throw ConfigError("two-group cash grid requires n = 2");
    if (points < 1) throw ConfigError("grid needs at least one point");
    std::vector<Vec> grid;
    grid.reserve(points);
    for (int k = 0; k < points; ++k) {
        const double f =
            points == 1 ? lo_frac : lo_frac + (hi_frac - lo_frac) * k / double(points - 1);
        Vec cash(2);
        cash << f * cfg.M0, (1.0 - f) * cfg.M0;
        grid.push_back(cash);
    }
    return grid;
}

std::vector<Vec> cash_grid_simplex(const ModelConfig& cfg, int subdivisions) {
    if (subdivisions < 1) throw ConfigError("simplex grid needs at least one subdivision");
    std::vector<Vec> grid;
    std::vector<int> counts(cfg.n, 0);
    // Interior barycentric nodes: positive integer weights summing to `subdivisions + n`.
    const int total = subdivisions + cfg.n;
    std::function<void(int, int)> rec = [&](int slot, int remaining) {
        if (slot == cfg.n - 1) {
            counts[slot] = remaining;
            Vec cash(cfg.n);
            for (int j = 0; j < cfg.n; ++j) cash(j) = cfg.M0 * counts[j] / double(total);
            grid.push_back(cash);
            return;
        }
        for (int c = 1; c <= remaining - (cfg.n - 1 - slot); ++c) {
            counts[slot] = c;
            rec(slot + 1, remaining - c);
        }
    };
    rec(0, total);
    return grid;
}

}  // namespace assetflow
