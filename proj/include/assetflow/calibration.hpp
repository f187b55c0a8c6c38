#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "assetflow/integrator.hpp"

namespace assetflow {

struct ObservedSeries {
    std::vector<double> times;  // monotone increasing
    Mat prices;                 // sample x asset
};

enum class LossKind { NLS, SML };

struct SmlSettings {
    int simulations = 100;     // S
    double noise_frac = 0.01;  // observation noise sigma_i = noise_frac * Pa_i
    std::uint64_t seed = 1;
};

struct FreeParam {
    std::string name;                // label used in reports
    std::vector<std::string> paths;  // config slots driven by this parameter
    double lo = 0.0;
    double hi = 0.0;
};

struct EstimationProblem {
    ModelConfig cfg;
    Vec x0;
    ObservedSeries obs;
    std::vector<FreeParam> free_params;
    std::vector<std::pair<std::string, double>> fixed_params;
    LossKind loss = LossKind::NLS;
    SmlSettings sml;
    IntegratorSettings integrator{};  // tolerances only; time fields derived from obs

    void validate() const;
};

struct EstimationResult {
    std::vector<std::string> paths;
    std::vector<double> theta;
    double loss_value = 0.0;  // SSE for NLS, mean log-likelihood for SML
    bool converged = false;
    long evaluations = 0;
    Vec rmse;  // fitted-series RMSE per asset
    bool density_floor_hit = false;
    std::string note;
};

// Applies theta onto the config and samples model prices at the observation times.
Mat simulate_observables(const EstimationProblem& prob, const std::vector<double>& theta);

double nls_sse(const EstimationProblem& prob, const std::vector<double>& theta);

// Mean log kernel density of the observations over S noise-dressed simulations,
// Silverman bandwidth per time slice; deterministic given the seed.
double sml_loglik(const EstimationProblem& prob, const std::vector<double>& theta,
                  std::uint64_t seed, bool* floor_hit = nullptr);

EstimationResult nls_fit(const EstimationProblem& prob);
EstimationResult sml_fit(const EstimationProblem& prob, std::uint64_t seed);

// Synthetic observations from a known config: truth trajectory sampled at
// `times` plus seeded Gaussian noise of noise_frac * Pa per asset.
ObservedSeries synthesize_observations(const ModelConfig& cfg, const Vec& x0,
                                       const std::vector<double>& times, double noise_frac,
                                       std::uint64_t seed,
                                       const IntegratorSettings& base = {});

}  // namespace assetflow
