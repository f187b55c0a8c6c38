#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "assetflow/bifurcation.hpp"
#include "assetflow/calibration.hpp"
#include "assetflow/market_analysis.hpp"
#include "assetflow/scenarios.hpp"

namespace assetflow {

inline constexpr const char* kToolVersion = "0.1.0";

// Written alongside every artifact so a run can be reproduced exactly.
struct RunManifest {
    std::string command;
    std::string scenario;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    Json settings;
    Json extra;
    std::vector<std::string> outputs;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

void write_trajectory_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                          const Trajectory& traj);
void write_manifold_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                        const std::vector<ManifoldRecord>& records);
void write_bifurcation_csv(const std::filesystem::path& path, const HopfScanResult& scan);
void write_spectrum_json(const std::filesystem::path& path, const SpectrumReport& report);
void write_excursion_csv(const std::filesystem::path& path, const ModelConfig& cfg,
                         const ExcursionSurface& surface);
void write_excursion_summary_json(const std::filesystem::path& path,
                                  const ExcursionSurface& surface);
void write_contagion_json(const std::filesystem::path& path, const ModelConfig& cfg,
                          const ContagionReport& report);
void write_estimation_json(const std::filesystem::path& path, const EstimationProblem& prob,
                           const EstimationResult& result);

Json spectrum_to_json(const SpectrumReport& report);

// Gnuplot companions consuming the CSV artifacts.
void write_bifurcation_plot(const std::filesystem::path& path, const std::string& csv_name);
void write_excursion_plot(const std::filesystem::path& path, const std::string& csv_name);
void write_contagion_plot(const std::filesystem::path& path, const std::string& dat_name);
void write_contagion_dat(const std::filesystem::path& path, const ContagionReport& report);

// Estimation problems load from JSON (series inline or as a CSV path).
EstimationProblem estimation_problem_from_json(const Json& j,
                                               const std::filesystem::path& base_dir);

ObservedSeries observations_from_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace assetflow
