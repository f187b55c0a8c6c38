#include "assetflow/market_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "assetflow/parallel.hpp"

namespace assetflow {

double excursion(const Trajectory& traj, int asset) {
    if (traj.states.empty()) throw InvalidStateError("excursion: empty trajectory");
    if (asset < 0 || asset >= traj.layout.m)
        throw InvalidStateError("excursion: asset index out of range");
    const int idx = traj.layout.price(asset);
    const double p0 = traj.states.front()(idx);
    double e = 0.0;
    for (const Vec& s : traj.states) e = std::max(e, std::abs(s(idx) - p0));
    return e;
}

namespace {

Mat price_correlation(const Trajectory& traj, double transient_fraction) {
    const int m = traj.layout.m;
    const size_t start =
        static_cast<size_t>(std::floor(transient_fraction * double(traj.size())));
    const size_t count = traj.size() - start;

    Vec mean = Vec::Zero(m);
    for (size_t k = start; k < traj.size(); ++k)
        for (int i = 0; i < m; ++i) mean(i) += traj.states[k](traj.layout.price(i));
    mean /= double(count);

    Mat cov = Mat::Zero(m, m);
    for (size_t k = start; k < traj.size(); ++k)
        for (int i = 0; i < m; ++i)
            for (int l = 0; l <= i; ++l)
                cov(i, l) += (traj.states[k](traj.layout.price(i)) - mean(i)) *
                             (traj.states[k](traj.layout.price(l)) - mean(l));

    Mat corr = Mat::Identity(m, m);
    for (int i = 0; i < m; ++i)
        for (int l = 0; l < i; ++l) {
            const double denom = std::sqrt(cov(i, i) * cov(l, l));
            const double r = denom > 0.0 ? cov(i, l) / denom : 0.0;
            corr(i, l) = corr(l, i) = std::clamp(r, -1.0, 1.0);
        }
    return corr;
}

}  // namespace

ExcursionSurface excursion_surface(const ModelConfig& cfg, const EquilibriumPoint& base,
                                   const std::vector<double>& dp1_grid,
                                   const std::vector<double>& dp2_grid,
                                   const SurfaceOptions& opts) {
    if (dp1_grid.empty() || dp2_grid.empty())
        throw ConfigError("excursion_surface: perturbation grids must be nonempty");

    ExcursionSurface surf;
    surf.dp1 = dp1_grid;
    surf.dp2 = dp2_grid;
    surf.nodes.resize(dp1_grid.size() * dp2_grid.size());

    const StateLayout lay = cfg.layout();
    parallel_for(static_cast<int>(surf.nodes.size()), [&](int idx) {
        ExcursionReport& rep = surf.nodes[idx];
        const double dp1 = dp1_grid[idx / dp2_grid.size()];
        const double dp2 = dp2_grid[idx % dp2_grid.size()];
        rep.perturbation = Vec::Zero(cfg.m);
        rep.perturbation(0) = dp1;
        if (cfg.m > 1) rep.perturbation(1) = dp2;
        try {
            Vec x0 = base.state;
            for (int i = 0; i < std::min(cfg.m, 2); ++i) {
                x0(lay.price(i)) += rep.perturbation(i);
                if (x0(lay.price(i)) <= 0.0)
                    throw InvalidStateError("perturbed price is not positive");
            }
            IntegratorSettings st = opts.integrator;
            st.t0 = 0.0;
            st.t_end = opts.horizon;
            st.sample_dt = opts.sample_dt;
            const Trajectory traj = integrate(cfg, x0, st);

            rep.excursions = Vec(cfg.m);
            for (int i = 0; i < cfg.m; ++i) rep.excursions(i) = excursion(traj, i);
            rep.e_max = rep.excursions.maxCoeff();
            rep.e_agg = rep.excursions.norm();
            rep.correlation = price_correlation(traj, opts.transient_fraction);
            rep.ok = true;
        } catch (const Error& e) {
            rep.error = e.what();
        }
    });

    // Per-asset summary over successful nodes.
    std::vector<const ExcursionReport*> good;
    for (const auto& rep : surf.nodes)
        if (rep.ok) good.push_back(&rep);
    surf.mean = Vec::Zero(cfg.m);
    surf.median = Vec::Zero(cfg.m);
    surf.stddev = Vec::Zero(cfg.m);
    surf.flatness = Vec::Zero(cfg.m);
    if (!good.empty()) {
        for (int i = 0; i < cfg.m; ++i) {
            std::vector<double> vals;
            vals.reserve(good.size());
            for (const auto* rep : good) vals.push_back(rep->excursions(i));
            std::sort(vals.begin(), vals.end());
            const size_t c = vals.size();
            surf.median(i) = c % 2 ? vals[c / 2] : 0.5 * (vals[c / 2 - 1] + vals[c / 2]);
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= double(c);
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            surf.mean(i) = mean;
            surf.stddev(i) = std::sqrt(var / double(c));
            surf.flatness(i) = mean > 0.0 ? surf.stddev(i) / mean
                                          : std::numeric_limits<double>::infinity();
        }
    }
    return surf;
}

ContagionReport contagion_matrix(const ModelConfig& cfg, const EquilibriumPoint& base,
                                 double shock_frac, const ContagionOptions& opts) {
    if (!(shock_frac > 0.0)) throw ConfigError("contagion_matrix: shock fraction must be > 0");
    const StateLayout lay = cfg.layout();

    IntegratorSettings st = opts.integrator;
    st.t0 = 0.0;
    st.t_end = opts.horizon;
    st.sample_dt = opts.sample_dt;

    // Late-window max |P_i - Pa_i| per asset; run index m is the unshocked baseline.
    auto late_stat = [&](const Trajectory& traj) {
        const size_t start = static_cast<size_t>(
            std::floor((1.0 - opts.window_fraction) * double(traj.size())));
        Vec stat = Vec::Zero(cfg.m);
        for (size_t k = start; k < traj.size(); ++k)
            for (int i = 0; i < cfg.m; ++i)
                stat(i) = std::max(stat(i),
                                   std::abs(traj.states[k](lay.price(i)) - cfg.Pa(i)));
        return stat;
    };

    std::vector<Vec> stats(cfg.m + 1);
    parallel_for(cfg.m + 1, [&](int run) {
        Vec x0 = base.state;
        if (run < cfg.m) x0(lay.price(run)) += shock_frac * cfg.Pa(run);
        stats[run] = late_stat(integrate(cfg, x0, st));
    });

    ContagionReport rep;
    rep.shock_frac = shock_frac;
    rep.horizon = opts.horizon;
    rep.window_fraction = opts.window_fraction;
    rep.baseline_stat = stats[cfg.m];
    rep.gamma = Mat::Zero(cfg.m, cfg.m);
    for (int j = 0; j < cfg.m; ++j) {
        const double dp0 = shock_frac * cfg.Pa(j);
        for (int i = 0; i < cfg.m; ++i) {
            if (i == j) continue;
            rep.gamma(i, j) = std::max(0.0, stats[j](i) - rep.baseline_stat(i)) / dp0;
        }
    }
    return rep;
}

double asymmetry_index(const Mat& gamma, int i, int j) {
    if (i < 0 || j < 0 || i >= gamma.rows() || j >= gamma.cols() || i == j)
        throw InvalidStateError("asymmetry_index: bad asset pair");
    const double denom = gamma(i, j) + gamma(j, i);
    if (denom <= 0.0)
        throw InvalidStateError("asymmetry_index: undefined for zero total response");
    return (gamma(i, j) - gamma(j, i)) / denom;
}

WealthSeries wealth_series(const ModelConfig& cfg, const Trajectory& traj) {
    if (traj.states.empty()) throw InvalidStateError("wealth_series: empty trajectory");
    const StateLayout lay = cfg.layout();
    const size_t count = traj.size();

    WealthSeries ws;
    ws.times = traj.times;
    ws.wealth.resize(count, cfg.n);
    ws.total.resize(count);
    ws.trading_flow.resize(count, cfg.n);
    ws.capital_gain.resize(count, cfg.n);

    for (size_t k = 0; k < count; ++k) {
        const Vec& s = traj.states[k];
        const Vec w = group_wealth(cfg, s);
        ws.wealth.row(k) = w.transpose();
        ws.total(k) = w.sum();

        const RateSnapshot snap = compute_rates(cfg, s);
        const FlowSnapshot flows = executed_flows(cfg, s, snap);
        const Vec deriv = rhs(cfg, s);
        for (int j = 0; j < cfg.n; ++j) {
            double trade = 0.0, gain = 0.0;
            for (int i = 0; i < cfg.m; ++i) {
                trade += flows.sell_cash(j, i) - flows.buy_cash(j, i);
                gain += s(lay.shares(j, i)) * deriv(lay.price(i));
            }
            ws.trading_flow(k, j) = trade;
            ws.capital_gain(k, j) = gain;
        }
    }
    return ws;
}

}  // namespace assetflow
