#include "assetflow/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace assetflow {

namespace {

constexpr double kInfLoss = std::numeric_limits<double>::infinity();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the pair; keeps per-simulation streams independent.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ModelConfig apply_theta(const EstimationProblem& prob, const std::vector<double>& theta) {
    ModelConfig cfg = prob.cfg;
    for (const auto& [path, value] : prob.fixed_params) set_param(cfg, path, value);
    for (size_t d = 0; d < prob.free_params.size(); ++d)
        for (const std::string& path : prob.free_params[d].paths)
            set_param(cfg, path, theta[d]);
    return cfg;
}

bool nearly_uniform(const std::vector<double>& t, double* dt_out) {
    if (t.size() < 2) return false;
    const double dt = t[1] - t[0];
    for (size_t k = 1; k < t.size(); ++k)
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * std::max(1.0, dt)) return false;
    *dt_out = dt;
    return true;
}

}  // namespace

void EstimationProblem::validate() const {
    cfg.validate();
    if (obs.times.size() < 2) throw ConfigError("estimation needs at least two observations");
    for (size_t k = 1; k < obs.times.size(); ++k)
        if (!(obs.times[k] > obs.times[k - 1]))
            throw ConfigError("observation times must be strictly increasing");
    if (obs.prices.rows() != static_cast<Eigen::Index>(obs.times.size()) ||
        obs.prices.cols() != cfg.m)
        throw ConfigError("observed prices must be (samples x assets)");
    if (free_params.empty()) throw ConfigError("free-parameter list is empty");
    for (const auto& fp : free_params) {
        if (!std::isfinite(fp.lo) || !std::isfinite(fp.hi) || !(fp.lo < fp.hi))
            throw ConfigError("free parameter '" + fp.name + "' needs finite bounds lo < hi");
        if (fp.paths.empty())
            throw ConfigError("free parameter '" + fp.name + "' resolves to no config slot");
        for (const std::string& path : fp.paths) {
            ModelConfig probe = cfg;
            set_param(probe, path, 0.5 * (fp.lo + fp.hi));  // existence check
        }
    }
    if (x0.size() != cfg.layout().size())
        throw ConfigError("estimation initial state has wrong dimension");
    if (loss == LossKind::SML) {
        if (sml.simulations < 50) throw ConfigError("SML needs at least 50 simulations");
        if (!(sml.noise_frac > 0.0)) throw ConfigError("SML needs a positive noise scale");
    }
}

Mat sample_prices(const ModelConfig& cfg, const Vec& x0, const std::vector<double>& t,
                  const IntegratorSettings& base) {
    IntegratorSettings st = base;
    st.t0 = 0.0;
    st.t_end = t.back();
    double dt = 0.0;
    const bool uniform_from_zero = nearly_uniform(t, &dt) && std::abs(t.front()) < 1e-12;
    st.sample_dt = uniform_from_zero ? dt : t.back() / 2000.0;

    const Trajectory traj = integrate(cfg, x0, st);
    const StateLayout lay = cfg.layout();

    Mat out(t.size(), cfg.m);
    if (uniform_from_zero) {
        if (traj.size() < t.size()) throw ConvergenceError("trajectory shorter than observations");
        for (size_t k = 0; k < t.size(); ++k)
            for (int i = 0; i < cfg.m; ++i) out(k, i) = traj.states[k](lay.price(i));
        return out;
    }
    // Irregular grid: linear interpolation on the dense uniform samples.
    for (size_t k = 0; k < t.size(); ++k) {
        const double ts = std::clamp(t[k], traj.times.front(), traj.times.back());
        const size_t hi = std::min<size_t>(
            traj.size() - 1,
            static_cast<size_t>(
                std::upper_bound(traj.times.begin(), traj.times.end(), ts) -
                traj.times.begin()));
        const size_t lo = hi == 0 ? 0 : hi - 1;
        const double span = traj.times[hi] - traj.times[lo];
        const double w = span > 0.0 ? (ts - traj.times[lo]) / span : 0.0;
        for (int i = 0; i < cfg.m; ++i)
            out(k, i) = (1.0 - w) * traj.states[lo](lay.price(i)) +
                        w * traj.states[hi](lay.price(i));
    }
    return out;
}

Mat simulate_observables(const EstimationProblem& prob, const std::vector<double>& theta) {
    return sample_prices(apply_theta(prob, theta), prob.x0, prob.obs.times, prob.integrator);
}

double nls_sse(const EstimationProblem& prob, const std::vector<double>& theta) {
    try {
        const Mat sim = simulate_observables(prob, theta);
        return (sim - prob.obs.prices).squaredNorm();
    } catch (const Error&) {
        return kInfLoss;  // integration failure signals infinite loss
    }
}

double sml_loglik(const EstimationProblem& prob, const std::vector<double>& theta,
                  std::uint64_t seed, bool* floor_hit) {
    constexpr double kFloor = 1e-300;
    const int S = prob.sml.simulations;
    Mat sim;
    try {
        sim = simulate_observables(prob, theta);
    } catch (const Error&) {
        return -kInfLoss;
    }

    // The model is deterministic, so the S simulated observable sets share one
    // trajectory and differ only in their per-simulation observation noise.
    const size_t T = prob.obs.times.size();
    const int m = prob.cfg.m;
    std::vector<Mat> noisy(S);
    for (int s = 0; s < S; ++s) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        noisy[s].resize(T, m);
        for (size_t k = 0; k < T; ++k)
            for (int i = 0; i < m; ++i)
                noisy[s](k, i) = sim(k, i) + prob.sml.noise_frac * prob.cfg.Pa(i) * gauss(rng);
    }

    bool hit = false;
    double loglik = 0.0;
    long terms = 0;
    const double inv_sqrt2pi = 0.3989422804014327;
    for (size_t k = 0; k < T; ++k)
        for (int i = 0; i < m; ++i) {
            double mean = 0.0;
            for (int s = 0; s < S; ++s) mean += noisy[s](k, i);
            mean /= S;
            double var = 0.0;
            for (int s = 0; s < S; ++s) {
                const double d = noisy[s](k, i) - mean;
                var += d * d;
            }
            const double sigma = std::sqrt(var / std::max(1, S - 1));
            const double h = 1.06 * sigma * std::pow(double(S), -0.2);  // Silverman
            double density = 0.0;
            if (h > 0.0) {
                for (int s = 0; s < S; ++s) {
                    const double u = (prob.obs.prices(k, i) - noisy[s](k, i)) / h;
                    density += std::exp(-0.5 * u * u);
                }
                density *= inv_sqrt2pi / (h * S);
            }
            if (density < kFloor) {
                density = kFloor;
                hit = true;
            }
            loglik += std::log(density);
            ++terms;
        }
    if (floor_hit) *floor_hit = hit;
    return loglik / double(terms);
}

// ---- bounded Nelder-Mead -------------------------------------------------------

namespace {

double to_unbounded(double x, double lo, double hi) {
    const double f = std::clamp((x - lo) / (hi - lo), 1e-9, 1.0 - 1e-9);
    return std::log(f / (1.0 - f));
}

double to_bounded(double u, double lo, double hi) {
    return lo + (hi - lo) / (1.0 + std::exp(-u));
}

struct NelderMeadResult {
    std::vector<double> x;
    double f = kInfLoss;
    bool converged = false;
    long evaluations = 0;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                             const std::vector<double>& start, double step, int max_iter,
                             double f_tol) {
    const int d = static_cast<int>(start.size());
    std::vector<std::vector<double>> xs(d + 1, start);
    std::vector<double> fs(d + 1);
    NelderMeadResult res;
    for (int v = 1; v <= d; ++v) xs[v][v - 1] += step;
    for (int v = 0; v <= d; ++v) {
        fs[v] = fn(xs[v]);
        ++res.evaluations;
    }

    auto order = [&] {
        std::vector<int> idx(d + 1);
        for (int v = 0; v <= d; ++v) idx[v] = v;
        std::sort(idx.begin(), idx.end(), [&](int p, int q) { return fs[p] < fs[q]; });
        std::vector<std::vector<double>> nxs(d + 1);
        std::vector<double> nfs(d + 1);
        for (int v = 0; v <= d; ++v) {
            nxs[v] = xs[idx[v]];
            nfs[v] = fs[idx[v]];
        }
        xs.swap(nxs);
        fs.swap(nfs);
    };

    for (int it = 0; it < max_iter; ++it) {
        order();
        if (std::abs(fs[d] - fs[0]) <= f_tol * (1.0 + std::abs(fs[0]))) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(d, 0.0);
        for (int v = 0; v < d; ++v)
            for (int c = 0; c < d; ++c) centroid[c] += xs[v][c] / d;

        auto blend = [&](double coef) {
            std::vector<double> x(d);
            for (int c = 0; c < d; ++c) x[c] = centroid[c] + coef * (xs[d][c] - centroid[c]);
            return x;
        };

        const auto xr = blend(-1.0);  // reflect
        const double fr = fn(xr);
        ++res.evaluations;
        if (fr < fs[0]) {
            const auto xe = blend(-2.0);  // expand
            const double fe = fn(xe);
            ++res.evaluations;
            if (fe < fr) {
                xs[d] = xe;
                fs[d] = fe;
            } else {
                xs[d] = xr;
                fs[d] = fr;
            }
        } else if (fr < fs[d - 1]) {
            xs[d] = xr;
            fs[d] = fr;
        } else {
            const auto xc = blend(fr < fs[d] ? -0.5 : 0.5);  // contract
            const double fc = fn(xc);
            ++res.evaluations;
            if (fc < std::min(fr, fs[d])) {
                xs[d] = xc;
                fs[d] = fc;
            } else {  // shrink toward the best vertex
                for (int v = 1; v <= d; ++v) {
                    for (int c = 0; c < d; ++c) xs[v][c] = 0.5 * (xs[v][c] + xs[0][c]);
                    fs[v] = fn(xs[v]);
                    ++res.evaluations;
                }
            }
        }
    }
    order();
    res.x = xs[0];
    res.f = fs[0];
    return res;
}

std::vector<std::vector<double>> restart_points(const EstimationProblem& prob, int count,
                                                std::uint64_t seed) {
    const size_t d = prob.free_params.size();
    std::vector<std::vector<double>> starts;
    std::vector<double> center(d);
    for (size_t c = 0; c < d; ++c)
        center[c] = 0.5 * (prob.free_params[c].lo + prob.free_params[c].hi);
    starts.push_back(center);
    std::mt19937_64 rng(mix_seed(seed, 0x5eedULL));
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    while (static_cast<int>(starts.size()) < count) {
        std::vector<double> p(d);
        for (size_t c = 0; c < d; ++c) {
            const auto& fp = prob.free_params[c];
            p[c] = fp.lo + (fp.hi - fp.lo) * uni(rng);
        }
        starts.push_back(p);
    }
    return starts;
}

EstimationResult run_fit(const EstimationProblem& prob,
                         const std::function<double(const std::vector<double>&)>& loss_fn,
                         int restarts, int max_iter, std::uint64_t seed) {
    prob.validate();
    const size_t d = prob.free_params.size();

    auto project = [&](const std::vector<double>& u) {
        std::vector<double> theta(d);
        for (size_t c = 0; c < d; ++c)
            theta[c] = to_bounded(u[c], prob.free_params[c].lo, prob.free_params[c].hi);
        return theta;
    };

    EstimationResult best;
    best.loss_value = kInfLoss;
    for (const auto& start : restart_points(prob, restarts, seed)) {
        std::vector<double> u0(d);
        for (size_t c = 0; c < d; ++c)
            u0[c] = to_unbounded(start[c], prob.free_params[c].lo, prob.free_params[c].hi);
        const NelderMeadResult nm = nelder_mead(
            [&](const std::vector<double>& u) { return loss_fn(project(u)); }, u0, 0.25,
            max_iter, 1e-10);
        best.evaluations += nm.evaluations;
        if (nm.f < best.loss_value) {
            best.loss_value = nm.f;
            best.theta = project(nm.x);
            best.converged = nm.converged;
        }
    }
    if (!std::isfinite(best.loss_value)) {
        best.note = "no restart produced a finite loss";
        best.converged = false;
        if (best.theta.empty()) best.theta = restart_points(prob, 1, seed)[0];
    }

    best.paths.reserve(d);
    for (const auto& fp : prob.free_params) best.paths.push_back(fp.name);

    try {
        const Mat sim = simulate_observables(prob, best.theta);
        best.rmse = Vec(prob.cfg.m);
        for (int i = 0; i < prob.cfg.m; ++i)
            best.rmse(i) = std::sqrt((sim.col(i) - prob.obs.prices.col(i)).squaredNorm() /
                                     double(prob.obs.times.size()));
    } catch (const Error&) {
        best.rmse = Vec::Constant(prob.cfg.m, std::nan(""));
    }
    return best;
}

}  // namespace

EstimationResult nls_fit(const EstimationProblem& prob) {
    if (prob.loss != LossKind::NLS) throw ConfigError("nls_fit called on a non-NLS problem");
    return run_fit(
        prob, [&](const std::vector<double>& theta) { return nls_sse(prob, theta); },
        /*restarts=*/5, /*max_iter=*/400, /*seed=*/0x51a2b3c4ULL);
}

EstimationResult sml_fit(const EstimationProblem& prob, std::uint64_t seed) {
    if (prob.loss != LossKind::SML) throw ConfigError("sml_fit called on a non-SML problem");
    bool floor_hit = false;
    EstimationResult res = run_fit(
        prob,
        [&](const std::vector<double>& theta) {
            bool hit = false;
            const double ll = sml_loglik(prob, theta, seed, &hit);
            if (hit) floor_hit = true;
            return -ll;
        },
        /*restarts=*/3, /*max_iter=*/250, seed);
    res.loss_value = -res.loss_value;  // report the log-likelihood itself
    res.density_floor_hit = floor_hit;
    return res;
}

ObservedSeries synthesize_observations(const ModelConfig& cfg, const Vec& x0,
                                       const std::vector<double>& times, double noise_frac,
                                       std::uint64_t seed, const IntegratorSettings& base) {
    const Mat clean = sample_prices(cfg, x0, times, base);

    ObservedSeries obs;
    obs.times = times;
    obs.prices = clean;
    if (noise_frac > 0.0) {
        std::mt19937_64 rng(mix_seed(seed, 0x0b5ULL));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index k = 0; k < obs.prices.rows(); ++k)
            for (int i = 0; i < cfg.m; ++i)
                obs.prices(k, i) += noise_frac * cfg.Pa(i) * gauss(rng);
    }
    return obs;
}

}  // namespace assetflow
