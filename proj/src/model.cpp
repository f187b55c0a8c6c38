#include "assetflow/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace assetflow {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void check_dims(const Mat& mat, int n, int m, const std::string& name) {
    require(mat.rows() == n && mat.cols() == m,
            name + " must be " + std::to_string(n) + "x" + std::to_string(m));
}

void check_nonneg(const Mat& mat, const std::string& name) {
    require(mat.minCoeff() >= 0.0, name + " entries must be >= 0");
}

void check_positive(const Mat& mat, const std::string& name) {
    require(mat.minCoeff() > 0.0, name + " entries must be > 0");
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void ModelConfig::validate(std::vector<std::string>* warnings) const {
    require(m >= 1, "m must be >= 1");
    require(n >= 1, "n must be >= 1");
    require(tau.size() == m, "tau must have m entries");
    require(Pa.size() == m, "Pa must have m entries");
    require(tau.minCoeff() > 0.0, "tau entries must be > 0");
    require(Pa.minCoeff() > 0.0, "Pa entries must be > 0");

    check_dims(c1, n, m, "c1");
    check_dims(c2, n, m, "c2");
    check_dims(q1, n, m, "q1");
    check_dims(q2, n, m, "q2");
    check_dims(a, n, m, "a");
    check_dims(b, n, m, "b");
    check_positive(c1, "c1");
    check_positive(c2, "c2");
    check_nonneg(q1, "q1");
    check_nonneg(q2, "q2");

    require(static_cast<int>(alpha.size()) == n, "alpha must hold one m x m matrix per group");
    require(static_cast<int>(beta.size()) == n, "beta must hold one m x m matrix per group");
    for (int j = 0; j < n; ++j) {
        check_dims(alpha[j], m, m, "alpha[" + std::to_string(j) + "]");
        check_dims(beta[j], m, m, "beta[" + std::to_string(j) + "]");
        check_nonneg(alpha[j], "alpha[" + std::to_string(j) + "]");
        check_nonneg(beta[j], "beta[" + std::to_string(j) + "]");
    }

    switch (sell_rule) {
        case SellRule::Tanh:
            check_dims(atilde, n, m, "atilde");
            check_dims(btilde, n, m, "btilde");
            check_dims(gamma_c, n, m, "gamma");
            check_dims(delta_c, n, m, "delta");
            break;
        case SellRule::LinearValue:
            check_dims(ctilde, n, m, "ctilde");
            check_dims(dtilde, n, m, "dtilde");
            break;
        case SellRule::ZeroSum:
            break;
    }

    require(M0 > 0.0, "M0 must be > 0");
    require(N0.size() == m, "N0 must have m entries");
    require(N0.minCoeff() > 0.0, "N0 entries must be > 0");

    if (!asset_names.empty())
        require(static_cast<int>(asset_names.size()) == m, "asset_names must have m entries");
    if (!group_names.empty())
        require(static_cast<int>(group_names.size()) == n, "group_names must have n entries");

    if (warnings) {
        double budget = 0.0;
        for (int j = 0; j < n; ++j) {
            double row = 0.0;
            for (int i = 0; i < m; ++i) {
                const double lo = a(j, i) - std::abs(b(j, i));
                const double hi = a(j, i) + std::abs(b(j, i));
                if (lo < 0.0 || hi > 1.0) {
                    std::ostringstream os;
                    os << "a[" << j << "][" << i << "] +/- |b| spans [" << lo << ", " << hi
                       << "] outside [0,1]; buy rate will be clamped";
                    warnings->push_back(os.str());
                }
                row += std::min(1.0, hi);
            }
            budget = std::max(budget, row);
        }
        if (budget > 1.0) {
            std::ostringstream os;
            os << "sum_i k[j][i] can reach " << budget
               << " > 1; monitored at runtime" << (budget_rescale ? " and rescaled" : "");
            warnings->push_back(os.str());
        }
        if (sell_rule == SellRule::Tanh) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < m; ++i) {
                    const double lo = atilde(j, i) - std::abs(btilde(j, i));
                    const double hi = atilde(j, i) + std::abs(btilde(j, i));
                    if (lo < 0.0 || hi > 1.0) {
                        std::ostringstream os;
                        os << "atilde[" << j << "][" << i << "] +/- |btilde| spans [" << lo << ", "
                           << hi << "] outside [0,1]; sell rate will be clamped";
                        warnings->push_back(os.str());
                    }
                }
        }
    }
}

double buy_rate(const ModelConfig& cfg, int j, int i, const Vec& trend_j, const Vec& value_j) {
    if (j < 0 || j >= cfg.n || i < 0 || i >= cfg.m)
        throw InvalidStateError("buy_rate: index out of range");
    if (!trend_j.allFinite() || !value_j.allFinite())
        throw InvalidStateError("buy_rate: non-finite sentiment");
    const double arg =
        cfg.alpha[j].row(i).dot(trend_j) + cfg.beta[j].row(i).dot(value_j);
    return clamp01(cfg.a(j, i) + cfg.b(j, i) * std::tanh(arg));
}

double sell_rate(const ModelConfig& cfg, int j, int i, const Vec& trend_j, const Vec& value_j,
                 double price_i) {
    if (j < 0 || j >= cfg.n || i < 0 || i >= cfg.m)
        throw InvalidStateError("sell_rate: index out of range");
    switch (cfg.sell_rule) {
        case SellRule::Tanh: {
            const double arg =
                cfg.gamma_c(j, i) * trend_j(i) + cfg.delta_c(j, i) * value_j(i);
            return clamp01(cfg.atilde(j, i) + cfg.btilde(j, i) * std::tanh(arg));
        }
        case SellRule::LinearValue: {
            if (!(price_i > 0.0)) throw InvalidStateError("sell_rate: price must be > 0");
            return clamp01(cfg.ctilde(j, i) + cfg.dtilde(j, i) * (price_i / cfg.Pa(i) - 1.0));
        }
        case SellRule::ZeroSum:
            return 1.0 - buy_rate(cfg, j, i, trend_j, value_j);
    }
    throw InvalidStateError("sell_rate: unknown rule");
}

RateSnapshot compute_rates(const ModelConfig& cfg, const Vec& state) {
    const StateLayout lay = cfg.layout();
    if (state.size() != lay.size())
        throw InvalidStateError("state has wrong dimension");
    if (!state.allFinite()) throw InvalidStateError("state has non-finite entries");

    RateSnapshot snap;
    snap.k.resize(cfg.n, cfg.m);
    snap.ktilde.resize(cfg.n, cfg.m);
    snap.budget_excess = Vec::Zero(cfg.n);

    Vec trend_j(cfg.m), value_j(cfg.m);
    for (int j = 0; j < cfg.n; ++j) {
        for (int i = 0; i < cfg.m; ++i) {
            trend_j(i) = state(lay.trend(j, i));
            value_j(i) = state(lay.value(j, i));
        }
        double row_sum = 0.0;
        for (int i = 0; i < cfg.m; ++i) {
            snap.k(j, i) = buy_rate(cfg, j, i, trend_j, value_j);
            snap.ktilde(j, i) = sell_rate(cfg, j, i, trend_j, value_j, state(lay.price(i)));
            row_sum += snap.k(j, i);
        }
        snap.budget_excess(j) = std::max(0.0, row_sum - 1.0);
        if (cfg.budget_rescale && row_sum > 1.0) snap.k.row(j) /= row_sum;
    }

    snap.demand = Vec::Zero(cfg.m);
    snap.supply = Vec::Zero(cfg.m);
    for (int i = 0; i < cfg.m; ++i) {
        for (int j = 0; j < cfg.n; ++j) {
            snap.demand(i) += snap.k(j, i) * state(lay.cash(j));
            snap.supply(i) += snap.ktilde(j, i) * state(lay.shares(j, i)) * state(lay.price(i));
        }
    }
    return snap;
}

FlowSnapshot executed_flows(const ModelConfig& cfg, const Vec& state, const RateSnapshot& snap) {
    const StateLayout lay = cfg.layout();
    const bool rationed = cfg.exec_mode == ExecMode::RationedClearing;
    FlowSnapshot flows;
    flows.buy_cash.resize(cfg.n, cfg.m);
    flows.sell_cash.resize(cfg.n, cfg.m);
    for (int i = 0; i < cfg.m; ++i) {
        if (snap.supply(i) <= kSupplyFloor) throw SingularSupplyError(i, snap.supply(i));
        double buy_scale = 1.0, sell_scale = 1.0;
        if (rationed) {
            const double matched = std::min(snap.demand(i), snap.supply(i));
            buy_scale = snap.demand(i) > 0.0 ? matched / snap.demand(i) : 0.0;
            sell_scale = matched / snap.supply(i);
        }
        const double price = state(lay.price(i));
        for (int j = 0; j < cfg.n; ++j) {
            flows.buy_cash(j, i) = snap.k(j, i) * state(lay.cash(j)) * buy_scale;
            flows.sell_cash(j, i) =
                snap.ktilde(j, i) * state(lay.shares(j, i)) * price * sell_scale;
        }
    }
    return flows;
}

void rhs(const ModelConfig& cfg, const Vec& state, Vec& dxdt) {
    const StateLayout lay = cfg.layout();
    const RateSnapshot snap = compute_rates(cfg, state);
    dxdt.resize(lay.size());

    // Relative price velocity per asset, shared by the price and trend equations.
    Vec g(cfg.m);
    for (int i = 0; i < cfg.m; ++i) {
        if (snap.supply(i) <= kSupplyFloor)
            throw SingularSupplyError(i, snap.supply(i));
        g(i) = (snap.demand(i) / snap.supply(i) - 1.0) / cfg.tau(i);
        dxdt(lay.price(i)) = state(lay.price(i)) * g(i);
    }

    const FlowSnapshot flows = executed_flows(cfg, state, snap);
    for (int j = 0; j < cfg.n; ++j) dxdt(lay.cash(j)) = 0.0;
    for (int i = 0; i < cfg.m; ++i) {
        const double price = state(lay.price(i));
        for (int j = 0; j < cfg.n; ++j) {
            dxdt(lay.cash(j)) += flows.sell_cash(j, i) - flows.buy_cash(j, i);
            dxdt(lay.shares(j, i)) = (flows.buy_cash(j, i) - flows.sell_cash(j, i)) / price;
        }
    }

    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i) {
            dxdt(lay.trend(j, i)) =
                cfg.c1(j, i) * (cfg.q1(j, i) * g(i) - state(lay.trend(j, i)));
            dxdt(lay.value(j, i)) =
                cfg.c2(j, i) * (cfg.q2(j, i) * (1.0 - state(lay.price(i)) / cfg.Pa(i)) -
                                state(lay.value(j, i)));
        }
}

Vec rhs(const ModelConfig& cfg, const Vec& state) {
    Vec out;
    rhs(cfg, state, out);
    return out;
}

Vec group_wealth(const ModelConfig& cfg, const Vec& state) {
    const StateLayout lay = cfg.layout();
    Vec w(cfg.n);
    for (int j = 0; j < cfg.n; ++j) {
        w(j) = state(lay.cash(j));
        for (int i = 0; i < cfg.m; ++i)
            w(j) += state(lay.shares(j, i)) * state(lay.price(i));
    }
    return w;
}

double total_wealth(const ModelConfig& cfg, const Vec& state) {
    return group_wealth(cfg, state).sum();
}

// ---- parameter addressing ----------------------------------------------------

namespace {

struct ParamPath {
    std::string name;
    std::vector<int> idx;  // -1 == wildcard
};

ParamPath parse_path(const std::string& path) {
    ParamPath p;
    size_t pos = 0;
    while (pos < path.size() && path[pos] != '[') ++pos;
    p.name = path.substr(0, pos);
    while (pos < path.size()) {
        if (path[pos] != '[') throw ConfigError("bad parameter path '" + path + "'");
        const size_t close = path.find(']', pos);
        if (close == std::string::npos)
            throw ConfigError("unterminated index in parameter path '" + path + "'");
        const std::string tok = path.substr(pos + 1, close - pos - 1);
        if (tok == "*") {
            p.idx.push_back(-1);
        } else {
            try {
                size_t used = 0;
                const int v = std::stoi(tok, &used);
                if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
                p.idx.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError("bad index '" + tok + "' in parameter path '" + path + "'");
            }
        }
        pos = close + 1;
    }
    return p;
}

// Visits every scalar slot matched by the path; `fn(double&)`.
template <typename Fn>
int visit_param(ModelConfig& cfg, const ParamPath& p, Fn&& fn) {
    auto span = [&](int bound, int k) {
        std::vector<int> out;
        if (p.idx[k] == -1)
            for (int v = 0; v < bound; ++v) out.push_back(v);
        else if (p.idx[k] < bound)
            out.push_back(p.idx[k]);
        return out;
    };

    auto scalar = [&](double& ref) {
        if (!p.idx.empty()) throw ConfigError("'" + p.name + "' takes no index");
        fn(ref);
        return 1;
    };
    auto vec = [&](Vec& v) {
        if (p.idx.size() != 1) throw ConfigError("'" + p.name + "' takes one index");
        int hits = 0;
        for (int i : span(static_cast<int>(v.size()), 0)) {
            fn(v(i));
            ++hits;
        }
        return hits;
    };
    auto mat = [&](Mat& mt) {
        if (p.idx.size() != 2) throw ConfigError("'" + p.name + "' takes [group][asset]");
        int hits = 0;
        for (int j : span(static_cast<int>(mt.rows()), 0))
            for (int i : span(static_cast<int>(mt.cols()), 1)) {
                fn(mt(j, i));
                ++hits;
            }
        return hits;
    };
    auto cube = [&](std::vector<Mat>& c) {
        if (p.idx.size() != 3)
            throw ConfigError("'" + p.name + "' takes [group][asset][influencing]");
        int hits = 0;
        for (int j : span(static_cast<int>(c.size()), 0))
            for (int i : span(static_cast<int>(c[j].rows()), 1))
                for (int l : span(static_cast<int>(c[j].cols()), 2)) {
                    fn(c[j](i, l));
                    ++hits;
                }
        return hits;
    };

    if (p.name == "M0") return scalar(cfg.M0);
    if (p.name == "tau") return vec(cfg.tau);
    if (p.name == "Pa") return vec(cfg.Pa);
    if (p.name == "N0") return vec(cfg.N0);
    if (p.name == "c1") return mat(cfg.c1);
    if (p.name == "c2") return mat(cfg.c2);
    if (p.name == "q1") return mat(cfg.q1);
    if (p.name == "q2") return mat(cfg.q2);
    if (p.name == "a") return mat(cfg.a);
    if (p.name == "b") return mat(cfg.b);
    if (p.name == "atilde") return mat(cfg.atilde);
    if (p.name == "btilde") return mat(cfg.btilde);
    if (p.name == "gamma") return mat(cfg.gamma_c);
    if (p.name == "delta") return mat(cfg.delta_c);
    if (p.name == "ctilde") return mat(cfg.ctilde);
    if (p.name == "dtilde") return mat(cfg.dtilde);
    if (p.name == "alpha") return cube(cfg.alpha);
    if (p.name == "beta") return cube(cfg.beta);
    throw ConfigError("unknown parameter '" + p.name + "'");
}

}  // namespace

void set_param(ModelConfig& cfg, const std::string& path, double value) {
    const ParamPath p = parse_path(path);
    const int hits = visit_param(cfg, p, [&](double& ref) { ref = value; });
    if (hits == 0) throw ConfigError("parameter path '" + path + "' matches nothing");
}

double get_param(const ModelConfig& cfg, const std::string& path) {
    const ParamPath p = parse_path(path);
    double value = 0.0;
    bool first = true, mixed = false;
    const int hits =
        visit_param(const_cast<ModelConfig&>(cfg), p, [&](double& ref) {
            if (first) {
                value = ref;
                first = false;
            } else if (ref != value) {
                mixed = true;
            }
        });
    if (hits == 0) throw ConfigError("parameter path '" + path + "' matches nothing");
    if (mixed)
        throw ConfigError("parameter path '" + path + "' matches entries with differing values");
    return value;
}

bool has_param(const ModelConfig& cfg, const std::string& path) {
    try {
        get_param(cfg, path);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

// ---- nondimensionalization ----------------------------------------------------

ModelConfig nondimensionalize(const ModelConfig& cfg, ScalingInfo* scaling) {
    ScalingInfo s;
    s.cash_scale = cfg.M0;
    s.share_scale = cfg.N0;
    s.price_scale = Vec(cfg.m);
    for (int i = 0; i < cfg.m; ++i) s.price_scale(i) = cfg.M0 / cfg.N0(i);

    ModelConfig out = cfg;
    for (int i = 0; i < cfg.m; ++i) out.Pa(i) = cfg.Pa(i) / s.price_scale(i);
    out.M0 = 1.0;
    out.N0 = Vec::Ones(cfg.m);
    if (scaling) *scaling = s;
    return out;
}

Vec nondimensionalize_state(const ScalingInfo& s, const StateLayout& lay, const Vec& state) {
    Vec out = state;
    for (int i = 0; i < lay.m; ++i) out(lay.price(i)) /= s.price_scale(i);
    for (int j = 0; j < lay.n; ++j) {
        out(lay.cash(j)) /= s.cash_scale;
        for (int i = 0; i < lay.m; ++i) out(lay.shares(j, i)) /= s.share_scale(i);
    }
    return out;
}

Vec redimensionalize_state(const ScalingInfo& s, const StateLayout& lay, const Vec& state) {
    Vec out = state;
    for (int i = 0; i < lay.m; ++i) out(lay.price(i)) *= s.price_scale(i);
    for (int j = 0; j < lay.n; ++j) {
        out(lay.cash(j)) *= s.cash_scale;
        for (int i = 0; i < lay.m; ++i) out(lay.shares(j, i)) *= s.share_scale(i);
    }
    return out;
}

}  // namespace assetflow
