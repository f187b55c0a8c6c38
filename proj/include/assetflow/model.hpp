#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "assetflow/errors.hpp"

namespace assetflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Canonical flattened state layout:
//   prices (i ascending), cash (j ascending), shares group-major (j outer),
//   trend sentiment group-major, value sentiment group-major.
struct StateLayout {
    int m = 0;  // assets
    int n = 0;  // investor groups

    int size() const { return m + n + 3 * m * n; }
    int price(int i) const { return i; }
    int cash(int j) const { return m + j; }
    int shares(int j, int i) const { return m + n + j * m + i; }
    int trend(int j, int i) const { return m + n + m * n + j * m + i; }
    int value(int j, int i) const { return m + n + 2 * m * n + j * m + i; }
};

enum class SellRule {
    Tanh,         // k~ = a~ + b~ tanh(gamma*z1 + delta*z2), same-asset sentiments only
    LinearValue,  // k~ = clamp(c~ + d~ (P/Pa - 1), 0, 1)
    ZeroSum,      // k~ = 1 - k
};

enum class ExecMode {
    AsWritten,         // cash/share flows taken literally from the flow equations
    RationedClearing,  // executed volume per asset scaled to min(demand, supply)
};

// All parameters of the m-asset, n-group system. Matrices are (group j, asset i);
// coupling cubes alpha/beta hold one m x m matrix per group with rows = bought
// asset i, cols = influencing asset l.
struct ModelConfig {
    int m = 0;
    int n = 0;

    Vec tau;  // price adjustment time scale per asset, > 0
    Vec Pa;   // fundamental value per asset, > 0

    Mat c1, c2;  // sentiment decay rates, > 0
    Mat q1, q2;  // sentiment magnitude coefficients, >= 0
    Mat a, b;    // buying-rate offset and gain

    std::vector<Mat> alpha;  // trend coupling, >= 0
    std::vector<Mat> beta;   // value coupling, >= 0

    SellRule sell_rule = SellRule::Tanh;
    Mat atilde, btilde, gamma_c, delta_c;  // Tanh rule
    Mat ctilde, dtilde;                    // LinearValue rule

    double M0 = 1.0;  // total cash
    Vec N0;           // total shares per asset

    ExecMode exec_mode = ExecMode::RationedClearing;
    bool budget_rescale = false;  // proportionally rescale k rows with sum > 1

    std::vector<std::string> asset_names;  // optional labels
    std::vector<std::string> group_names;

    StateLayout layout() const { return StateLayout{m, n}; }

    // Throws ConfigError on hard violations; soft issues (clamping windows,
    // potential budget excess) are appended to `warnings` when provided.
    void validate(std::vector<std::string>* warnings = nullptr) const;
};

// Transition rates and market aggregates at one state.
struct RateSnapshot {
    Mat k;              // buy rates, clamped to [0,1]
    Mat ktilde;         // sell rates, clamped to [0,1]
    Vec demand;         // S_i = sum_j k[j][i] M_j
    Vec supply;         // T_i = sum_j k~[j][i] N[j][i] P_i
    Vec budget_excess;  // per group: max(0, sum_i k[j][i] - 1) before any rescale
};

inline constexpr double kSupplyFloor = 1e-12;

double buy_rate(const ModelConfig& cfg, int j, int i, const Vec& trend_j, const Vec& value_j);
double sell_rate(const ModelConfig& cfg, int j, int i, const Vec& trend_j, const Vec& value_j,
                 double price_i);

RateSnapshot compute_rates(const ModelConfig& cfg, const Vec& state);

// Cash volumes actually executed per (group, asset); under RationedClearing the
// as-written flows are scaled to the matched volume min(S, T) per asset.
struct FlowSnapshot {
    Mat buy_cash;
    Mat sell_cash;
};

FlowSnapshot executed_flows(const ModelConfig& cfg, const Vec& state, const RateSnapshot& rates);

// Full ODE right-hand side. Pure; throws SingularSupplyError / InvalidStateError.
void rhs(const ModelConfig& cfg, const Vec& state, Vec& dxdt);
Vec rhs(const ModelConfig& cfg, const Vec& state);

// W_j = M_j + sum_i N[j][i] P_i.
Vec group_wealth(const ModelConfig& cfg, const Vec& state);
double total_wealth(const ModelConfig& cfg, const Vec& state);

// ---- parameter addressing ----------------------------------------------------
//
// Scalar entries of a config are addressed by paths like
//   "M0", "tau[0]", "q1[1][0]", "alpha[1][0][1]"
// with 0-based indices; "*" matches every index in that slot.

void set_param(ModelConfig& cfg, const std::string& path, double value);
double get_param(const ModelConfig& cfg, const std::string& path);
bool has_param(const ModelConfig& cfg, const std::string& path);

// ---- nondimensionalization ----------------------------------------------------

// Liquidity scales: L_i = M0 / N0_i; prices measured in L_i, cash in M0,
// shares in N0_i. Totals become 1.
struct ScalingInfo {
    double cash_scale = 1.0;
    Vec share_scale;
    Vec price_scale;
};

ModelConfig nondimensionalize(const ModelConfig& cfg, ScalingInfo* scaling = nullptr);
Vec nondimensionalize_state(const ScalingInfo& s, const StateLayout& lay, const Vec& state);
Vec redimensionalize_state(const ScalingInfo& s, const StateLayout& lay, const Vec& state);

}  // namespace assetflow
