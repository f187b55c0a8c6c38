#include "assetflow/scenarios.hpp"

#include <fstream>
#include <sstream>

#include "assetflow/preset_data.hpp"

namespace assetflow {

namespace {

[[noreturn]] void fail(const std::string& msg, const std::string& ctx) {
    throw ConfigError(msg, ctx);
}

const Json& field(const Json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) fail("missing field '" + key + "'", ctx);
    return j.at(key);
}

double number(const Json& j, const std::string& ctx) {
    if (!j.is_number()) fail("expected a number", ctx);
    return j.get<double>();
}

Vec parse_vec(const Json& j, int len, const std::string& ctx) {
    if (!j.is_array() || static_cast<int>(j.size()) != len)
        fail("expected an array of " + std::to_string(len) + " numbers", ctx);
    Vec v(len);
    for (int i = 0; i < len; ++i) v(i) = number(j[i], ctx + "[" + std::to_string(i) + "]");
    return v;
}

Mat parse_mat(const Json& j, int rows, int cols, const std::string& ctx) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        fail("expected " + std::to_string(rows) + " rows", ctx);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        m.row(r) = parse_vec(j[r], cols, ctx + "[" + std::to_string(r) + "]").transpose();
    return m;
}

std::vector<Mat> parse_cube(const Json& j, int groups, int dim, const std::string& ctx) {
    if (!j.is_array() || static_cast<int>(j.size()) != groups)
        fail("expected " + std::to_string(groups) + " group matrices", ctx);
    std::vector<Mat> out;
    out.reserve(groups);
    for (int g = 0; g < groups; ++g)
        out.push_back(parse_mat(j[g], dim, dim, ctx + "[" + std::to_string(g) + "]"));
    return out;
}

std::vector<std::string> parse_names(const Json& j, int len, const std::string& ctx) {
    if (!j.is_array() || static_cast<int>(j.size()) != len)
        fail("expected " + std::to_string(len) + " names", ctx);
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) fail("expected strings", ctx);
        out.push_back(e.get<std::string>());
    }
    return out;
}

void reject_unknown(const Json& j, const std::vector<std::string>& known,
                    const std::string& ctx) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const auto& k : known) ok = ok || k == key;
        if (!ok) fail("unknown field '" + key + "'", ctx);
    }
}

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vec_to_json(const Vec& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into a line/column pair.
        size_t line = 1, col = 1;
        for (size_t p = 0; p + 1 < e.byte && p < text.size(); ++p) {
            if (text[p] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("JSON parse error in " + origin + " at line " + std::to_string(line) +
                          ", column " + std::to_string(col) + ": " + e.what());
    }
}

ModelConfig config_from_json(const Json& j, const std::string& ctx) {
    if (!j.is_object()) fail("config must be a JSON object", ctx);
    reject_unknown(j,
                   {"m", "n", "asset_names", "group_names", "tau", "Pa", "c1", "c2", "q1", "q2",
                    "a", "b", "alpha", "beta", "sell_rule", "M0", "N0", "exec_mode",
                    "budget_rescale"},
                   ctx);

    ModelConfig cfg;
    cfg.m = static_cast<int>(number(field(j, "m", ctx), ctx + ".m"));
    cfg.n = static_cast<int>(number(field(j, "n", ctx), ctx + ".n"));
    if (cfg.m < 1 || cfg.n < 1) fail("m and n must be >= 1", ctx);

    cfg.tau = parse_vec(field(j, "tau", ctx), cfg.m, ctx + ".tau");
    cfg.Pa = parse_vec(field(j, "Pa", ctx), cfg.m, ctx + ".Pa");
    cfg.c1 = parse_mat(field(j, "c1", ctx), cfg.n, cfg.m, ctx + ".c1");
    cfg.c2 = parse_mat(field(j, "c2", ctx), cfg.n, cfg.m, ctx + ".c2");
    cfg.q1 = parse_mat(field(j, "q1", ctx), cfg.n, cfg.m, ctx + ".q1");
    cfg.q2 = parse_mat(field(j, "q2", ctx), cfg.n, cfg.m, ctx + ".q2");
    cfg.a = parse_mat(field(j, "a", ctx), cfg.n, cfg.m, ctx + ".a");
    cfg.b = parse_mat(field(j, "b", ctx), cfg.n, cfg.m, ctx + ".b");
    cfg.alpha = parse_cube(field(j, "alpha", ctx), cfg.n, cfg.m, ctx + ".alpha");
    cfg.beta = parse_cube(field(j, "beta", ctx), cfg.n, cfg.m, ctx + ".beta");

    const Json& rule = field(j, "sell_rule", ctx);
    const std::string rule_ctx = ctx + ".sell_rule";
    if (!rule.is_object()) fail("sell_rule must be an object", rule_ctx);
    const std::string kind =
        field(rule, "kind", rule_ctx).is_string()
            ? rule.at("kind").get<std::string>()
            : (fail("kind must be a string", rule_ctx + ".kind"), std::string{});
    if (kind == "tanh") {
        reject_unknown(rule, {"kind", "atilde", "btilde", "gamma", "delta"}, rule_ctx);
        cfg.sell_rule = SellRule::Tanh;
        cfg.atilde = parse_mat(field(rule, "atilde", rule_ctx), cfg.n, cfg.m, rule_ctx + ".atilde");
        cfg.btilde = parse_mat(field(rule, "btilde", rule_ctx), cfg.n, cfg.m, rule_ctx + ".btilde");
        cfg.gamma_c = parse_mat(field(rule, "gamma", rule_ctx), cfg.n, cfg.m, rule_ctx + ".gamma");
        cfg.delta_c = parse_mat(field(rule, "delta", rule_ctx), cfg.n, cfg.m, rule_ctx + ".delta");
    } else if (kind == "linear_value") {
        reject_unknown(rule, {"kind", "ctilde", "dtilde"}, rule_ctx);
        cfg.sell_rule = SellRule::LinearValue;
        cfg.ctilde = parse_mat(field(rule, "ctilde", rule_ctx), cfg.n, cfg.m, rule_ctx + ".ctilde");
        cfg.dtilde = parse_mat(field(rule, "dtilde", rule_ctx), cfg.n, cfg.m, rule_ctx + ".dtilde");
    } else if (kind == "zero_sum") {
        reject_unknown(rule, {"kind"}, rule_ctx);
        cfg.sell_rule = SellRule::ZeroSum;
    } else {
        fail("unknown sell rule '" + kind + "'", rule_ctx + ".kind");
    }

    cfg.M0 = number(field(j, "M0", ctx), ctx + ".M0");
    cfg.N0 = parse_vec(field(j, "N0", ctx), cfg.m, ctx + ".N0");

    if (j.contains("exec_mode")) {
        const std::string mode = j.at("exec_mode").is_string()
                                     ? j.at("exec_mode").get<std::string>()
                                     : (fail("exec_mode must be a string", ctx), std::string{});
        if (mode == "rationed_clearing")
            cfg.exec_mode = ExecMode::RationedClearing;
        else if (mode == "as_written")
            cfg.exec_mode = ExecMode::AsWritten;
        else
            fail("unknown exec_mode '" + mode + "'", ctx + ".exec_mode");
    }
    if (j.contains("budget_rescale")) {
        if (!j.at("budget_rescale").is_boolean())
            fail("budget_rescale must be a boolean", ctx + ".budget_rescale");
        cfg.budget_rescale = j.at("budget_rescale").get<bool>();
    }
    if (j.contains("asset_names"))
        cfg.asset_names = parse_names(j.at("asset_names"), cfg.m, ctx + ".asset_names");
    if (j.contains("group_names"))
        cfg.group_names = parse_names(j.at("group_names"), cfg.n, ctx + ".group_names");

    cfg.validate();
    return cfg;
}

Json config_to_json(const ModelConfig& cfg) {
    Json j;
    j["m"] = cfg.m;
    j["n"] = cfg.n;
    if (!cfg.asset_names.empty()) j["asset_names"] = cfg.asset_names;
    if (!cfg.group_names.empty()) j["group_names"] = cfg.group_names;
    j["tau"] = vec_to_json(cfg.tau);
    j["Pa"] = vec_to_json(cfg.Pa);
    j["c1"] = mat_to_json(cfg.c1);
    j["c2"] = mat_to_json(cfg.c2);
    j["q1"] = mat_to_json(cfg.q1);
    j["q2"] = mat_to_json(cfg.q2);
    j["a"] = mat_to_json(cfg.a);
    j["b"] = mat_to_json(cfg.b);
    Json alpha = Json::array(), beta = Json::array();
    for (int g = 0; g < cfg.n; ++g) {
        alpha.push_back(mat_to_json(cfg.alpha[g]));
        beta.push_back(mat_to_json(cfg.beta[g]));
    }
    j["alpha"] = std::move(alpha);
    j["beta"] = std::move(beta);
    Json rule;
    switch (cfg.sell_rule) {
        case SellRule::Tanh:
            rule["kind"] = "tanh";
            rule["atilde"] = mat_to_json(cfg.atilde);
            rule["btilde"] = mat_to_json(cfg.btilde);
            rule["gamma"] = mat_to_json(cfg.gamma_c);
            rule["delta"] = mat_to_json(cfg.delta_c);
            break;
        case SellRule::LinearValue:
            rule["kind"] = "linear_value";
            rule["ctilde"] = mat_to_json(cfg.ctilde);
            rule["dtilde"] = mat_to_json(cfg.dtilde);
            break;
        case SellRule::ZeroSum:
            rule["kind"] = "zero_sum";
            break;
    }
    j["sell_rule"] = std::move(rule);
    j["M0"] = cfg.M0;
    j["N0"] = vec_to_json(cfg.N0);
    j["exec_mode"] =
        cfg.exec_mode == ExecMode::RationedClearing ? "rationed_clearing" : "as_written";
    j["budget_rescale"] = cfg.budget_rescale;
    return j;
}

ScenarioPreset preset_from_json(const Json& j) {
    const std::string ctx = "$";
    if (!j.is_object()) fail("preset must be a JSON object", ctx);
    reject_unknown(
        j, {"name", "description", "config", "cash_split", "initial_perturb_frac", "aliases",
            "provenance"},
        ctx);
    ScenarioPreset p;
    p.name = field(j, "name", ctx).get<std::string>();
    if (j.contains("description")) p.description = j.at("description").get<std::string>();
    p.config = config_from_json(field(j, "config", ctx), ctx + ".config");
    p.cash_split = parse_vec(field(j, "cash_split", ctx), p.config.n, ctx + ".cash_split");
    if (j.contains("initial_perturb_frac"))
        p.initial_perturb_frac = number(j.at("initial_perturb_frac"), ctx + ".initial_perturb_frac");
    if (j.contains("aliases")) {
        for (const auto& [key, value] : j.at("aliases").items()) {
            std::vector<std::string> paths;
            if (!value.is_array()) fail("alias must map to an array of paths", ctx + ".aliases");
            for (const auto& e : value) paths.push_back(e.get<std::string>());
            p.aliases[key] = std::move(paths);
        }
    }
    if (j.contains("provenance")) p.provenance = j.at("provenance");
    return p;
}

std::vector<std::string> preset_names() {
    return {"desantis-case1", "desantis-case2", "desantis-case3", "bulut-mixed",
            "cavani-nigeria-libya"};
}

ScenarioPreset load_scenario(const std::string& name_or_path) {
    const char* text = nullptr;
    if (name_or_path == "desantis-case1") text = detail::kPresetDesantisCase1;
    else if (name_or_path == "desantis-case2") text = detail::kPresetDesantisCase2;
    else if (name_or_path == "desantis-case3") text = detail::kPresetDesantisCase3;
    else if (name_or_path == "bulut-mixed") text = detail::kPresetBulutMixed;
    else if (name_or_path == "cavani-nigeria-libya") text = detail::kPresetCavaniNigeriaLibya;

    if (text) return preset_from_json(parse_json_text(text, "preset " + name_or_path));

    std::ifstream file(name_or_path);
    if (!file) {
        std::ostringstream os;
        os << "unknown scenario '" << name_or_path << "'; available presets:";
        for (const auto& n : preset_names()) os << " " << n;
        throw ConfigError(os.str());
    }
    std::stringstream buf;
    buf << file.rdbuf();
    const Json j = parse_json_text(buf.str(), name_or_path);

    // A bare config file is also accepted; it becomes an anonymous preset.
    if (j.contains("config")) return preset_from_json(j);
    ScenarioPreset p;
    p.name = name_or_path;
    p.config = config_from_json(j);
    p.cash_split = Vec::Constant(p.config.n, p.config.M0 / p.config.n);
    return p;
}

std::vector<std::string> resolve_param(const ScenarioPreset& preset, const std::string& name) {
    const auto it = preset.aliases.find(name);
    if (it != preset.aliases.end()) return it->second;
    return {name};
}

void apply_override(ModelConfig& cfg, const ScenarioPreset& preset, const std::string& name,
                    double value) {
    for (const std::string& path : resolve_param(preset, name)) set_param(cfg, path, value);
}

EquilibriumPoint scenario_equilibrium(const ScenarioPreset& preset, const ModelConfig& cfg) {
    try {
        return fundamental_equilibrium(cfg, preset.cash_split);
    } catch (const CalibrationError&) {
        // No fundamental point for these totals; rest on the manifold instead.
        return solve_manifold_point(cfg, preset.cash_split);
    }
}

Vec default_initial_state(const ScenarioPreset& preset, const ModelConfig& cfg) {
    Vec x0 = scenario_equilibrium(preset, cfg).state;
    x0(cfg.layout().price(0)) *= 1.0 + preset.initial_perturb_frac;
    return x0;
}

std::uint64_t config_hash(const ModelConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace assetflow
