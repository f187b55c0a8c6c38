#pragma once

#include <functional>
#include <string>
#include <vector>

namespace assetflow {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string details;
};

struct CriterionSpec {
    int id;
    std::string name;
    std::function<CriterionResult()> run;
};

// Golden scenario checks 1..14; the CLI `validate` subcommand runs 1..13.
std::vector<CriterionSpec> acceptance_criteria();

CriterionResult run_criterion(const CriterionSpec& spec);

// Runs the selected criteria (empty = all), printing one pass/fail line each.
// Returns true when every selected criterion passed.
bool run_acceptance(const std::vector<int>& ids, std::vector<CriterionResult>* results = nullptr,
                    const std::string& artifact_dir = {});

}  // namespace assetflow
