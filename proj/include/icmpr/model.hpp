#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace icmpr {

// The six model types: a PH or MPR baseline, optionally with gamma frailty,
// optionally with a dispersion regression on the frailty variance.
enum class ModelType { PH, PHF, PHDM, MPR, MPRF, MPRDM };

bool has_shape_regression(ModelType t);
bool has_frailty(ModelType t);
bool has_dispersion_regression(ModelType t);

std::string to_string(ModelType t);
ModelType model_type_from_string(const std::string& name);

// Covariate index sets for the scale (x), shape (z) and dispersion (w)
// linear predictors. Intercepts are implicit: an index set never contains
// an intercept column. time_offset is applied at ingestion, not here; model
// times are always offset-adjusted.
struct ModelSpec {
  ModelType type = ModelType::PH;
  std::vector<int> scale_idx;
  std::vector<int> shape_idx;
  std::vector<int> disp_idx;
  double time_offset = 0.0;

  int n_params() const;

  // Throws ValidationError when an index set is present in a component the
  // model type does not regress, when an index is out of [0, n_columns), or
  // when a set contains duplicates.
  void validate(int n_columns) const;
};

// Packed coefficient blocks. beta and alpha always carry an intercept at
// position 0 (for the PH family alpha has length 1 and holds log gamma);
// psi is empty exactly when the model type has no frailty.
struct Theta {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd psi;

  int dim() const { return static_cast<int>(beta.size() + alpha.size() + psi.size()); }

  Eigen::VectorXd pack() const;
  static Theta unpack(const ModelSpec& spec, const Eigen::VectorXd& packed);
  static Theta zeros(const ModelSpec& spec);
};

// Per-subject Weibull scale/shape and frailty variance. phi == 0 encodes
// "no frailty", so every formula below has a single code path with a
// guarded limit.
struct ParamTriple {
  double lambda = 1.0;
  double gamma = 1.0;
  double phi = 0.0;
};

// lambda = exp(x'beta), gamma = exp(z'alpha), phi = exp(w'psi) or 0.
// row holds the raw covariate columns; the index sets in spec select them.
ParamTriple evaluate_parameters(const ModelSpec& spec, const Theta& theta,
                                const Eigen::VectorXd& row);

// Conditional (frailty = 1) hazard lambda*gamma*t^(gamma-1); t > 0.
double hazard(const ParamTriple& p, double t);

// Cumulative hazard lambda*t^gamma; t >= 0, +inf allowed.
double cum_hazard(const ParamTriple& p, double t);

// log of the marginal survivor: -log(1 + phi*Lambda)/phi, with the phi -> 0
// limit -Lambda. Below phi = 1e-8 a second-order expansion
// -Lambda*(1 - phi*Lambda/2) avoids the 0/0 cancellation.
double log_marginal_survivor(const ParamTriple& p, double t);
double marginal_survivor(const ParamTriple& p, double t);

// -d log S_m/dt = hazard(t) * S_m(t)^phi; t > 0.
double marginal_hazard(const ParamTriple& p, double t);

// Solves S_m(t) = 1/2: (log 2/lambda)^(1/gamma) without frailty,
// ((2^phi - 1)/(phi*lambda))^(1/gamma) with.
double median_time(const ParamTriple& p);

}  // namespace icmpr
