#include "assetflow/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace assetflow {

void IntegratorSettings::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw ConfigError("integrator tolerances must be > 0");
    if (!(t_end > t0)) throw ConfigError("t_end must be greater than t0");
    if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
    if (max_steps <= 0) throw ConfigError("max_steps must be > 0");
}

std::vector<double> Trajectory::series(int state_index) const {
    std::vector<double> out(states.size());
    for (size_t k = 0; k < states.size(); ++k) out[k] = states[k](state_index);
    return out;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - bhat (embedded 4th-order error weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseStep {
    double t = 0.0, h = 0.0;
    Vec r1, r2, r3, r4, r5;

    Vec eval(double ts) const {
        const double theta = (ts - t) / h;
        const double omt = 1.0 - theta;
        return r1 + theta * (r2 + omt * (r3 + theta * (r4 + omt * r5)));
    }
};

double error_norm(const Vec& err, const Vec& x0, const Vec& x1, double atol, double rtol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(x0(i)), std::abs(x1(i)));
        const double r = err(i) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const OdeRhs& f, double t0, const Vec& x0, const Vec& f0, double atol,
                    double rtol, double span) {
    const auto wnorm = [&](const Vec& v, const Vec& ref) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = atol + rtol * std::abs(ref(i));
            acc += (v(i) / sc) * (v(i) / sc);
        }
        return std::sqrt(acc / static_cast<double>(v.size()));
    };
    const double d0 = wnorm(x0, x0);
    const double d1 = wnorm(f0, x0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    Vec x1 = x0 + h0 * f0, f1(x0.size());
    try {
        f(t0 + h0, x1, f1);
    } catch (const Error&) {
        return std::max(1e-6 * span, 1e-12);
    }
    const double d2 = wnorm(f1 - f0, x0) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, span});
}

}  // namespace

Trajectory integrate_ode(const OdeRhs& f, const Vec& x0, const IntegratorSettings& st,
                         StateLayout layout) {
    st.validate();
    const double span = st.t_end - st.t0;
    const double hmin = st.min_step > 0.0 ? st.min_step : 1e-13 * span;

    Trajectory traj;
    traj.layout = layout;
    const long n_samples = static_cast<long>(std::floor(span / st.sample_dt + 1e-9)) + 1;
    traj.times.reserve(n_samples);
    traj.states.reserve(n_samples);

    Vec x = x0;
    double t = st.t0;
    Vec k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), k5(x.size()), k6(x.size()),
        k7(x.size());
    f(t, x, k1);

    traj.times.push_back(t);
    traj.states.push_back(x);
    long next_sample = 1;

    double h = initial_step(f, t, x, k1, st.abs_tol, st.rel_tol, span);
    double facold = 1e-4;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
    bool last_rejected = false;

    while (next_sample < n_samples) {
        if (traj.diagnostics.steps + traj.diagnostics.rejected >= st.max_steps)
            throw ConvergenceError("integration exceeded max_steps at t = " + std::to_string(t));
        if (h < hmin) throw StepUnderflowError(t, h);
        h = std::min(h, st.t_end - t);

        bool stage_failed = false;
        Vec xnew;
        double err = 0.0;
        try {
            f(t + c2 * h, x + h * (a21 * k1), k2);
            f(t + c3 * h, x + h * (a31 * k1 + a32 * k2), k3);
            f(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
            f(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
            f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
            xnew = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f(t + h, xnew, k7);
            const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err = error_norm(errv, x, xnew, st.abs_tol, st.rel_tol);
            if (!std::isfinite(err)) err = 10.0;
        } catch (const SingularSupplyError& e) {
            // A probe left the valid region; shrink unless we are already at the floor.
            if (h / 2.0 < hmin) throw SingularSupplyError(e.asset, e.value, t);
            stage_failed = true;
        } catch (const InvalidStateError&) {
            // Stage prediction overshot into an invalid region (e.g. negative price).
            if (h / 2.0 < hmin) throw StepUnderflowError(t, h);
            stage_failed = true;
        }

        if (stage_failed) {
            ++traj.diagnostics.rejected;
            h /= 2.0;
            last_rejected = true;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            // Accepted; build the dense interpolant before advancing.
            DenseStep dense;
            dense.t = t;
            dense.h = h;
            dense.r1 = x;
            dense.r2 = xnew - x;
            dense.r3 = h * k1 - dense.r2;
            dense.r4 = dense.r2 - h * k7 - dense.r3;
            dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            const double t_next = t + h;
            while (next_sample < n_samples) {
                const double ts = st.t0 + next_sample * st.sample_dt;
                if (ts > t_next + 1e-12 * span) break;
                traj.times.push_back(ts);
                traj.states.push_back(dense.eval(std::min(ts, t_next)));
                ++next_sample;
            }

            t = t_next;
            x.swap(xnew);
            k1.swap(k7);  // FSAL
            ++traj.diagnostics.steps;

            facold = std::max(err, 1e-4);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            last_rejected = false;
            h = hnew;
        } else {
            ++traj.diagnostics.rejected;
            h /= std::min(facc1, fac11 / safe);
            last_rejected = true;
        }
    }
    return traj;
}

Trajectory integrate(const ModelConfig& cfg, const Vec& x0, const IntegratorSettings& settings) {
    const StateLayout lay = cfg.layout();
    if (x0.size() != lay.size()) throw InvalidStateError("initial state has wrong dimension");
    Trajectory traj = integrate_ode(
        [&cfg](double, const Vec& x, Vec& dxdt) { rhs(cfg, x, dxdt); }, x0, settings, lay);
    for (const Vec& s : traj.states) {
        const RateSnapshot snap = compute_rates(cfg, s);
        traj.diagnostics.max_budget_excess =
            std::max(traj.diagnostics.max_budget_excess, snap.budget_excess.maxCoeff());
    }
    return traj;
}

Trajectory integrate_to_attractor(const ModelConfig& cfg, const Vec& x0,
                                  const IntegratorSettings& settings, double transient_fraction) {
    if (transient_fraction < 0.0 || transient_fraction > 0.9)
        throw ConfigError("transient_fraction must lie in [0, 0.9]");
    Trajectory traj = integrate(cfg, x0, settings);
    if (transient_fraction == 0.0) return traj;
    const size_t drop =
        static_cast<size_t>(std::floor(transient_fraction * static_cast<double>(traj.size())));
    if (drop > 0) {
        traj.times.erase(traj.times.begin(), traj.times.begin() + drop);
        traj.states.erase(traj.states.begin(), traj.states.begin() + drop);
    }
    return traj;
}

DriftReport drift_monitor(const ModelConfig& cfg, const Trajectory& traj) {
    if (traj.states.empty()) throw InvalidStateError("drift_monitor: empty trajectory");
    const StateLayout lay = cfg.layout();
    DriftReport rep;
    rep.shares = Vec::Zero(cfg.m);
    for (const Vec& s : traj.states) {
        double cash_total = 0.0;
        for (int j = 0; j < cfg.n; ++j) cash_total += s(lay.cash(j));
        rep.cash = std::max(rep.cash, std::abs(cash_total - cfg.M0));
        for (int i = 0; i < cfg.m; ++i) {
            double share_total = 0.0;
            for (int j = 0; j < cfg.n; ++j) share_total += s(lay.shares(j, i));
            rep.shares(i) = std::max(rep.shares(i), std::abs(share_total - cfg.N0(i)));
        }
    }
    return rep;
}

}  // namespace assetflow
