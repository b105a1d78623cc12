#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/estimator.hpp"
#include "icmpr/selection.hpp"
#include "icmpr/simulation.hpp"
#include "icmpr/turnbull.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace icmpr {

// Exit-code contract shared by the CLI and scripts that drive it.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitNonIdentifiable = 4;
inline constexpr int kExitValidation = 5;

// CSV with a header; required columns `left` and `right` (blank, "NA" or
// "Inf" in `right` means right-censored), every other column a numeric
// covariate. time_offset is subtracted from both endpoints.
Dataset load_dataset_csv(const std::string& path, double time_offset = 0.0);
Dataset dataset_from_csv_text(const std::string& text, double time_offset = 0.0);

// Comma-separated covariate names; `a:b` is an interaction and appends the
// elementwise product column when not already present.
std::vector<int> resolve_covariate_list(Dataset& data, const std::string& list);

// Write-temp-then-rename so partially written files are never observed.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Fit bundle: everything needed to reload a fit and predict from it.
nlohmann::json fit_to_json(const FitResult& fit, int n_obs,
                           const std::vector<std::string>& columns);
FitResult fit_from_json(const nlohmann::json& bundle, std::vector<std::string>& columns,
                        int& n_obs);

std::string fit_table_text(const FitResult& fit, int n_obs);

std::string grid_to_csv(const ModelGridResult& grid);
nlohmann::json grid_to_json(const ModelGridResult& grid);

std::string turnbull_to_csv(const TurnbullEstimate& est);

std::string study_to_csv(const StudySummary& summary);
nlohmann::json study_to_json(const StudySummary& summary, const SimulationPlan& plan);

// Scenario schema: n/d/p/replicates/seed, truth {type, scale/shape/
// dispersion coefficient maps keyed by covariate name}, covariates
// [{name, kind, ...}], optional fit {type, scale/shape/dispersion name
// lists}.
Scenario scenario_from_json(const nlohmann::json& j);
ModelSpec fit_spec_from_scenario_json(const nlohmann::json& j, const Scenario& scenario);

std::string format_g6(double x);

}  // namespace icmpr
