#include "assetflow/bifurcation.hpp"

#include <algorithm>
#include <cmath>

#include "assetflow/parallel.hpp"

namespace assetflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CycleMetrics metrics_from_series(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 3)
        throw InvalidStateError("cycle_metrics: need at least three samples");

    CycleMetrics cm;
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    cm.p_max = *mx;
    cm.p_min = *mn;
    cm.amplitude = 0.5 * (cm.p_max - cm.p_min);

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    const double noise_floor = 1e-6 * std::abs(mean);

    const double spread = cm.p_max - cm.p_min;
    if (spread <= noise_floor) {
        cm.oscillatory = false;
        return cm;  // constant signal; period undefined
    }

    // Strict local maxima that poke above the mean by more than the floor,
    // refined by a parabolic fit through the three bracketing samples.
    std::vector<double> peak_times;
    for (size_t k = 1; k + 1 < y.size(); ++k) {
        if (!(y[k] > y[k - 1] && y[k] > y[k + 1])) continue;
        if (!(y[k] > mean + noise_floor)) continue;
        const double denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
        double tp = t[k];
        if (denom < 0.0) {
            const double dt = 0.5 * (t[k + 1] - t[k - 1]);
            tp += 0.5 * dt * (y[k - 1] - y[k + 1]) / denom;
        }
        peak_times.push_back(tp);
    }
    cm.peaks = static_cast<int>(peak_times.size());

    if (cm.peaks < 3)
        throw ConvergenceError("window too short: " + std::to_string(cm.peaks) +
                               " peak(s) over an oscillating window");

    cm.oscillatory = true;
    cm.period = (peak_times.back() - peak_times.front()) / static_cast<double>(cm.peaks - 1);
    return cm;
}

}  // namespace

CycleMetrics cycle_metrics(const std::vector<double>& times, const std::vector<double>& values) {
    return metrics_from_series(times, values);
}

CycleMetrics cycle_metrics(const Trajectory& traj, int asset) {
    if (asset < 0 || asset >= traj.layout.m)
        throw InvalidStateError("cycle_metrics: asset index out of range");
    return metrics_from_series(traj.times, traj.price_series(asset));
}

namespace {

struct ReducedLeading {
    double re = 0.0;
    double im = 0.0;
};

ReducedLeading reduced_leading(const ModelConfig& base, const std::string& param, double value,
                               const Vec& cash_split) {
    ModelConfig cfg = base;
    set_param(cfg, param, value);
    const EquilibriumPoint eq = fundamental_equilibrium(cfg, cash_split);
    const auto eigs = eigenvalues(jacobian_reduced(cfg, eq));
    ReducedLeading lead;
    lead.re = -std::numeric_limits<double>::infinity();
    for (const auto& ev : eigs)
        if (ev.real() > lead.re) {
            lead.re = ev.real();
            lead.im = std::abs(ev.imag());
        }
    return lead;
}

}  // namespace

HopfPoint find_hopf_threshold(const ModelConfig& cfg, const std::string& param, double lo,
                              double hi, double tol, const Vec& cash_split) {
    if (!(hi > lo)) throw ConfigError("find_hopf_threshold: bracket must satisfy lo < hi");
    if (!(tol > 0.0)) throw ConfigError("find_hopf_threshold: tol must be > 0");

    ReducedLeading flo = reduced_leading(cfg, param, lo, cash_split);
    ReducedLeading fhi = reduced_leading(cfg, param, hi, cash_split);
    HopfPoint hp;
    hp.leading_lo = flo.re;
    hp.leading_hi = fhi.re;
    if (flo.re == 0.0 || fhi.re == 0.0 || (flo.re < 0.0) == (fhi.re < 0.0))
        throw ConvergenceError("no sign change of the leading real part over [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");

    double a = lo, b = hi;
    ReducedLeading fmid;
    while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        fmid = reduced_leading(cfg, param, mid, cash_split);
        if ((fmid.re < 0.0) == (flo.re < 0.0)) {
            a = mid;
            flo = fmid;
        } else {
            b = mid;
        }
    }
    hp.q_crit = 0.5 * (a + b);

    const ReducedLeading crossing = reduced_leading(cfg, param, hp.q_crit, cash_split);
    if (crossing.im <= 1e-8)
        throw ConvergenceError("leading pair is purely real at the crossing: fold, not Hopf");
    hp.omega = crossing.im;
    hp.period = kTwoPi / hp.omega;

    const double dq = std::max(tol, 1e-4 * (std::abs(hp.q_crit) + 1.0));
    const double re_p = reduced_leading(cfg, param, hp.q_crit + dq, cash_split).re;
    const double re_m = reduced_leading(cfg, param, hp.q_crit - dq, cash_split).re;
    hp.transversality = (re_p - re_m) / (2.0 * dq);
    if (hp.transversality == 0.0)
        throw ConvergenceError("transversality condition failed: d Re(lambda)/d mu = 0");
    return hp;
}

HopfScanResult bifurcation_scan(const ModelConfig& base, const std::string& param,
                                const std::vector<double>& grid, const Vec& cash_split,
                                const BifurcationOptions& opts) {
    for (size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw ConfigError("bifurcation grid must be increasing");

    HopfScanResult result;
    result.param = param;
    result.nodes.resize(grid.size());

    parallel_for(static_cast<int>(grid.size()), [&](int idx) {
        ScanNode& node = result.nodes[idx];
        node.value = grid[idx];
        try {
            ModelConfig cfg = base;
            set_param(cfg, param, node.value);
            const EquilibriumPoint eq = fundamental_equilibrium(cfg, cash_split);
            const SpectrumReport rep = spectrum_reduced(cfg, eq);
            node.classification = rep.classification;
            node.leading_re = rep.leading;
            for (const auto& ev : rep.eigenvalues)
                if (ev.real() == rep.leading) {
                    node.leading_im = std::abs(ev.imag());
                    break;
                }

            const double period_guess =
                node.leading_im > 1e-6 ? kTwoPi / node.leading_im : 20.0;
            IntegratorSettings st = opts.integrator;
            st.t0 = 0.0;
            st.t_end = opts.horizon > 0.0 ? opts.horizon : 25.0 * period_guess;
            st.sample_dt = period_guess / opts.samples_per_period;

            Vec x0 = eq.state;
            x0(0) *= 1.0 + opts.perturb_frac;
            const Trajectory tail =
                integrate_to_attractor(cfg, x0, st, opts.transient_fraction);
            node.metrics = cycle_metrics(tail, opts.metric_asset);
            node.simulated = true;
        } catch (const Error& e) {
            node.error = e.what();
        }
    });

    for (size_t k = 1; k < result.nodes.size(); ++k) {
        const ScanNode& prev = result.nodes[k - 1];
        const ScanNode& cur = result.nodes[k];
        if (!prev.error.empty() || !cur.error.empty()) continue;
        if ((prev.leading_re < 0.0) != (cur.leading_re < 0.0)) {
            result.crossing_found = true;
            // Linear interpolation of the crossing inside the bracketing cell.
            const double w = prev.leading_re / (prev.leading_re - cur.leading_re);
            result.q_crit = prev.value + w * (cur.value - prev.value);
            break;
        }
    }
    return result;
}

}  // namespace assetflow
