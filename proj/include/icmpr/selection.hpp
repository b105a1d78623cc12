#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/estimator.hpp"
#include "icmpr/model.hpp"

#include <string>
#include <vector>

namespace icmpr {

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

// AIC = -2 loglik + 2k, BIC = -2 loglik + k log n; n counts subjects.
InformationCriteria information_criteria(double loglik, int k, int n);

// One covariate structure applied across model types; shape/dispersion sets
// are coerced empty for types without those regressions.
struct CovariateStructure {
  std::string name;
  std::vector<int> scale;
  std::vector<int> shape;
  std::vector<int> disp;
};

struct GridEntry {
  std::string label;
  ModelSpec spec;
  bool converged = false;
  double loglik = 0.0;
  int k = 0;
  double aic = 0.0;
  double bic = 0.0;
  double daic = 0.0;
  double dbic = 0.0;
};

struct TypeSummary {
  ModelType type = ModelType::PH;
  double mean_aic = 0.0;
  double mean_bic = 0.0;
  double mean_daic = 0.0;
  double mean_dbic = 0.0;
};

struct ModelGridResult {
  std::vector<GridEntry> entries;
  std::vector<TypeSummary> per_type;
  int n = 0;
  int best_aic = -1;  // indices into entries, -1 when nothing converged
  int best_bic = -1;
};

// Fits every (type, structure) combination; dAIC/dBIC are relative to the
// minimum over converged fits. Non-convergent fits stay in the table,
// flagged and excluded from the minima and the per-type means.
ModelGridResult fit_model_grid(const Dataset& data,
                               const std::vector<CovariateStructure>& structures,
                               const std::vector<ModelType>& types,
                               const FitOptions& opts = {});

enum class Criterion { AIC, BIC };

Criterion criterion_from_string(const std::string& name);

struct StepwiseMove {
  std::string description;
  double criterion = 0.0;
  double loglik = 0.0;
  int k = 0;
  bool accepted = false;
  bool converged = true;
};

struct StepwiseResult {
  ModelSpec best;
  FitResult fit;
  double criterion_value = 0.0;
  std::vector<StepwiseMove> trace;
};

// Greedy add/drop search. Each round proposes, per candidate covariate,
// a change in the scale alone, the shape alone, the dispersion alone, and
// the simultaneous pairs/triple of those components (restricted to the
// components the model type regresses); the move with the lowest criterion
// wins and the search stops when no move improves it. Ties prefer fewer
// parameters, then the scale < shape < dispersion enumeration order.
StepwiseResult stepwise(const ModelSpec& start, const Dataset& data,
                        const std::vector<int>& candidates, Criterion criterion,
                        const FitOptions& opts = {});

}  // namespace icmpr
