#include "assetflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace assetflow {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string asset_label(const ModelConfig& cfg, int i) {
    return cfg.asset_names.empty() ? std::to_string(i + 1) : cfg.asset_names[i];
}

std::string group_label(const ModelConfig& cfg, int j) {
    return cfg.group_names.empty() ? std::to_string(j + 1) : cfg.group_names[j];
}

Json complex_pairs(const std::vector<std::complex<double>>& eigs) {
    Json arr = Json::array();
    for (const auto& ev : eigs) arr.push_back(Json::array({ev.real(), ev.imag()}));
    return arr;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    Json j;
    j["command"] = manifest.command;
    j["tool_version"] = kToolVersion;
    j["scenario"] = manifest.scenario;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(manifest.config_hash));
    j["config_hash"] = hash;
    j["seed"] = manifest.seed;
    j["settings"] = manifest.settings;
    if (!manifest.extra.is_null()) j["results"] = manifest.extra;
    j["outputs"] = manifest.outputs;
    open_out(path) << j.dump(2) << "\n";
}

void write_trajectory_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                          const Trajectory& traj) {
    std::ofstream out = open_out(path);
    out << "time";
    for (int i = 0; i < cfg.m; ++i) out << ",P_" << asset_label(cfg, i);
    for (int j = 0; j < cfg.n; ++j) out << ",M_" << group_label(cfg, j);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i)
            out << ",N_" << group_label(cfg, j) << "_" << asset_label(cfg, i);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i)
            out << ",Z1_" << group_label(cfg, j) << "_" << asset_label(cfg, i);
    for (int j = 0; j < cfg.n; ++j)
        for (int i = 0; i < cfg.m; ++i)
            out << ",Z2_" << group_label(cfg, j) << "_" << asset_label(cfg, i);
    for (int j = 0; j < cfg.n; ++j) out << ",W_" << group_label(cfg, j);
    out << "\n";

    const StateLayout lay = cfg.layout();
    for (size_t k = 0; k < traj.size(); ++k) {
        const Vec& s = traj.states[k];
        out << format_double(traj.times[k]);
        for (int c = 0; c < lay.size(); ++c) out << "," << format_double(s(c));
        const Vec w = group_wealth(cfg, s);
        for (int j = 0; j < cfg.n; ++j) out << "," << format_double(w(j));
        out << "\n";
    }
}

void write_manifold_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                        const std::vector<ManifoldRecord>& records) {
    std::ofstream out = open_out(path);
    out << "M_1";
    for (int i = 0; i < cfg.m; ++i) out << ",P_eq_" << asset_label(cfg, i);
    out << ",residual,stable,leading_re\n";
    for (const auto& rec : records) {
        out << format_double(rec.cash(0));
        if (rec.converged) {
            for (int i = 0; i < cfg.m; ++i) out << "," << format_double(rec.price(i));
            out << "," << format_double(rec.residual) << "," << (rec.stable ? 1 : 0) << ","
                << format_double(rec.leading);
        } else {
            for (int i = 0; i < cfg.m; ++i) out << ",nan";
            out << ",nan,0,nan";
        }
        out << "\n";
    }
}

void write_bifurcation_csv(const std::filesystem::path& path, const HopfScanResult& scan) {
    std::ofstream out = open_out(path);
    out << "parameter,leading_re,amplitude,period,p_max,p_min,classification\n";
    for (const auto& node : scan.nodes) {
        out << format_double(node.value) << "," << format_double(node.leading_re) << ",";
        if (node.simulated) {
            out << format_double(node.metrics.amplitude) << ",";
            out << (node.metrics.period ? format_double(*node.metrics.period) : "nan") << ",";
            out << format_double(node.metrics.p_max) << "," << format_double(node.metrics.p_min);
        } else {
            out << "nan,nan,nan,nan";
        }
        out << "," << (node.error.empty() ? to_string(node.classification) : "error") << "\n";
    }
}

Json spectrum_to_json(const SpectrumReport& report) {
    Json j;
    j["jacobian"] = report.kind == JacobianKind::Full ? "full" : "reduced";
    j["eigenvalues"] = complex_pairs(report.eigenvalues);
    j["zero_modes"] = report.zero_modes;
    j["expected_zero_modes"] = report.expected_zero_modes;
    j["zero_mode_mismatch"] = report.zero_mode_mismatch;
    j["zero_tol"] = report.zero_tol;
    j["leading_re"] = report.leading;
    j["classification"] = to_string(report.classification);
    return j;
}

void write_spectrum_json(const std::filesystem::path& path, const SpectrumReport& report) {
    open_out(path) << spectrum_to_json(report).dump(2) << "\n";
}

void write_excursion_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                         const ExcursionSurface& surface) {
    std::ofstream out = open_out(path);
    out << "dP_1,dP_2";
    for (int i = 0; i < cfg.m; ++i) out << ",E_" << asset_label(cfg, i);
    out << ",E_max,E_agg\n";
    for (size_t r = 0; r < surface.dp1.size(); ++r)
        for (size_t c = 0; c < surface.dp2.size(); ++c) {
            const ExcursionReport& rep = surface.at(r, c);
            out << format_double(surface.dp1[r]) << "," << format_double(surface.dp2[c]);
            if (rep.ok) {
                for (int i = 0; i < cfg.m; ++i) out << "," << format_double(rep.excursions(i));
                out << "," << format_double(rep.e_max) << "," << format_double(rep.e_agg);
            } else {
                for (int i = 0; i < cfg.m + 2; ++i) out << ",nan";
            }
            out << "\n";
        }
}

void write_excursion_summary_json(const std::filesystem::path& path,
                                  const ExcursionSurface& surface) {
    Json j;
    auto vec = [](const Vec& v) {
        Json arr = Json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
        return arr;
    };
    j["mean"] = vec(surface.mean);
    j["median"] = vec(surface.median);
    j["stddev"] = vec(surface.stddev);
    j["flatness"] = vec(surface.flatness);
    int failed = 0;
    for (const auto& rep : surface.nodes)
        if (!rep.ok) ++failed;
    j["nodes"] = surface.nodes.size();
    j["failed_nodes"] = failed;
    open_out(path) << j.dump(2) << "\n";
}

void write_contagion_json(const std::filesystem::path& path, const ModelConfig& cfg,
                          const ContagionReport& report) {
    Json j;
    Json gamma = Json::array();
    for (int i = 0; i < cfg.m; ++i) {
        Json row = Json::array();
        for (int c = 0; c < cfg.m; ++c) row.push_back(report.gamma(i, c));
        gamma.push_back(std::move(row));
    }
    j["gamma"] = std::move(gamma);
    Json names = Json::array();
    for (int i = 0; i < cfg.m; ++i) names.push_back(asset_label(cfg, i));
    j["assets"] = std::move(names);
    j["shock_frac"] = report.shock_frac;
    j["horizon"] = report.horizon;
    j["window_fraction"] = report.window_fraction;
    if (cfg.m == 2) {
        try {
            j["asymmetry_index"] = asymmetry_index(report.gamma, 0, 1);
        } catch (const Error&) {
            j["asymmetry_index"] = nullptr;
        }
    }
    open_out(path) << j.dump(2) << "\n";
}

void write_estimation_json(const std::filesystem::path& path, const EstimationProblem& prob,
                           const EstimationResult& result) {
    Json j;
    j["loss"] = prob.loss == LossKind::NLS ? "nls" : "sml";
    j["loss_value"] = result.loss_value;
    j["converged"] = result.converged;
    j["evaluations"] = result.evaluations;
    Json params = Json::array();
    for (size_t d = 0; d < result.theta.size(); ++d) {
        Json p;
        p["name"] = result.paths[d];
        p["estimate"] = result.theta[d];
        p["lo"] = prob.free_params[d].lo;
        p["hi"] = prob.free_params[d].hi;
        params.push_back(std::move(p));
    }
    j["parameters"] = std::move(params);
    Json rmse = Json::array();
    for (Eigen::Index i = 0; i < result.rmse.size(); ++i) rmse.push_back(result.rmse(i));
    j["rmse"] = std::move(rmse);
    if (result.density_floor_hit) j["density_floor_hit"] = true;
    if (!result.note.empty()) j["note"] = result.note;
    open_out(path) << j.dump(2) << "\n";
}

void write_bifurcation_plot(const std::filesystem::path& path, const std::string& csv_name) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script: amplitude and period against the scanned parameter\n"
           "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set terminal pngcairo size 900,1200\n"
           "set output 'bifurcation.png'\n"
           "set multiplot layout 3,1\n"
           "set xlabel 'parameter'\n"
           "set ylabel 'amplitude'\n"
           "plot '" << csv_name << "' using 1:3 with linespoints title 'amplitude'\n"
           "set ylabel 'period'\n"
           "plot '" << csv_name << "' using 1:4 with linespoints title 'period'\n"
           "set ylabel 'price envelope'\n"
           "plot '" << csv_name << "' using 1:5 with lines title 'P max', \\\n"
           "     '" << csv_name << "' using 1:6 with lines title 'P min'\n"
           "unset multiplot\n";
}

void write_excursion_plot(const std::filesystem::path& path, const std::string& csv_name) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script: excursion surface over the perturbation grid\n"
           "set datafile separator ','\n"
           "set terminal pngcairo size 900,700\n"
           "set output 'excursion_surface.png'\n"
           "set dgrid3d 30,30\n"
           "set hidden3d\n"
           "set xlabel 'dP_1'\n"
           "set ylabel 'dP_2'\n"
           "set zlabel 'excursion'\n"
           "splot '" << csv_name << "' every ::1 using 1:2:3 with lines title 'E(asset 1)'\n";
}

void write_contagion_dat(const std::filesystem::path& path, const ContagionReport& report) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < report.gamma.rows(); ++i) {
        for (Eigen::Index c = 0; c < report.gamma.cols(); ++c)
            out << (c ? " " : "") << format_double(report.gamma(i, c));
        out << "\n";
    }
}

void write_contagion_plot(const std::filesystem::path& path, const std::string& dat_name) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script: contagion matrix heatmap\n"
           "set terminal pngcairo size 700,600\n"
           "set output 'contagion_matrix.png'\n"
           "set xlabel 'shocked asset'\n"
           "set ylabel 'responding asset'\n"
           "set palette rgbformulae 22,13,-31\n"
           "plot '" << dat_name << "' matrix with image title ''\n";
}

ObservedSeries observations_from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read observation CSV '" + path.string() + "'");
    ObservedSeries obs;
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw ConfigError("non-numeric row in observation CSV '" + path.string() + "'");
        }
        first = false;
        if (!rows.empty() && rows.front().size() != row.size())
            throw ConfigError("ragged rows in observation CSV '" + path.string() + "'");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().size() < 2)
        throw ConfigError("observation CSV needs time plus at least one price column");
    obs.prices.resize(rows.size(), rows.front().size() - 1);
    obs.times.reserve(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        obs.times.push_back(rows[r][0]);
        for (size_t c = 1; c < rows[r].size(); ++c)
            obs.prices(r, c - 1) = rows[r][c];
    }
    return obs;
}

EstimationProblem estimation_problem_from_json(const Json& j,
                                               const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("estimation problem must be a JSON object");
    EstimationProblem prob;

    ScenarioPreset preset;
    if (j.contains("scenario")) {
        preset = load_scenario(j.at("scenario").get<std::string>());
    } else if (j.contains("config")) {
        preset.config = config_from_json(j.at("config"), "$.config");
        preset.cash_split = Vec::Constant(preset.config.n, preset.config.M0 / preset.config.n);
    } else {
        throw ConfigError("estimation problem needs 'scenario' or 'config'");
    }
    if (j.contains("overrides"))
        for (const auto& [key, value] : j.at("overrides").items())
            apply_override(preset.config, preset, key, value.get<double>());
    prob.cfg = preset.config;
    prob.x0 = default_initial_state(preset, prob.cfg);

    if (j.contains("observations")) {
        const Json& o = j.at("observations");
        if (o.contains("csv")) {
            prob.obs = observations_from_csv(base_dir / o.at("csv").get<std::string>());
        } else {
            prob.obs.times = o.at("times").get<std::vector<double>>();
            const auto rows = o.at("prices").get<std::vector<std::vector<double>>>();
            prob.obs.prices.resize(rows.size(), prob.cfg.m);
            for (size_t r = 0; r < rows.size(); ++r) {
                if (static_cast<int>(rows[r].size()) != prob.cfg.m)
                    throw ConfigError("observation row width must equal m", "$.observations");
                for (int c = 0; c < prob.cfg.m; ++c) prob.obs.prices(r, c) = rows[r][c];
            }
        }
    } else {
        throw ConfigError("estimation problem needs 'observations'");
    }

    if (!j.contains("free")) throw ConfigError("estimation problem needs 'free' parameters");
    for (const auto& fp : j.at("free")) {
        FreeParam f;
        f.name = fp.at("param").get<std::string>();
        f.paths = resolve_param(preset, f.name);
        f.lo = fp.at("lo").get<double>();
        f.hi = fp.at("hi").get<double>();
        prob.free_params.push_back(std::move(f));
    }
    if (j.contains("fixed"))
        for (const auto& [key, value] : j.at("fixed").items())
            for (const std::string& path : resolve_param(preset, key))
                prob.fixed_params.emplace_back(path, value.get<double>());

    prob.loss = LossKind::NLS;
    if (j.contains("loss")) {
        const std::string kind = j.at("loss").get<std::string>();
        if (kind == "sml")
            prob.loss = LossKind::SML;
        else if (kind != "nls")
            throw ConfigError("loss must be 'nls' or 'sml'");
    }
    if (j.contains("sml")) {
        const Json& s = j.at("sml");
        if (s.contains("simulations")) prob.sml.simulations = s.at("simulations").get<int>();
        if (s.contains("noise_frac")) prob.sml.noise_frac = s.at("noise_frac").get<double>();
        if (s.contains("seed")) prob.sml.seed = s.at("seed").get<std::uint64_t>();
    }
    return prob;
}

}  // namespace assetflow
