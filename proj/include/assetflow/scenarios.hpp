#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "assetflow/equilibrium.hpp"
#include "assetflow/model.hpp"

namespace assetflow {

using Json = nlohmann::ordered_json;

struct ScenarioPreset {
    std::string name;
    std::string description;
    ModelConfig config;
    Vec cash_split;
    double initial_perturb_frac = 0.01;
    std::map<std::string, std::vector<std::string>> aliases;
    Json provenance;
};

std::vector<std::string> preset_names();

// Built-in preset by name, otherwise a preset/config JSON file by path.
ScenarioPreset load_scenario(const std::string& name_or_path);

ModelConfig config_from_json(const Json& j, const std::string& ctx = "$");
Json config_to_json(const ModelConfig& cfg);

ScenarioPreset preset_from_json(const Json& j);
Json parse_json_text(const std::string& text, const std::string& origin);

// Alias (or raw path) -> concrete parameter paths.
std::vector<std::string> resolve_param(const ScenarioPreset& preset, const std::string& name);
void apply_override(ModelConfig& cfg, const ScenarioPreset& preset, const std::string& name,
                    double value);

// Equilibrium for the preset's cash split (fundamental when it exists, manifold
// otherwise) with the leading price kicked by the preset's perturbation.
Vec default_initial_state(const ScenarioPreset& preset, const ModelConfig& cfg);
EquilibriumPoint scenario_equilibrium(const ScenarioPreset& preset, const ModelConfig& cfg);

std::uint64_t config_hash(const ModelConfig& cfg);

}  // namespace assetflow
