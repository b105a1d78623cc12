#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/likelihood.hpp"
#include "icmpr/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace icmpr {

struct FitOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;        // on the max-norm of the score
  double step_tol = 1e-9;        // on the max-norm parameter change
  std::uint64_t seed = 0;        // drives the stall-recovery perturbation
  std::optional<Theta> initial;  // overrides initialize() when set
};

struct FitResult {
  ModelSpec spec;
  Theta theta_hat;
  double loglik = 0.0;
  Eigen::MatrixXd covariance;  // inverse observed information
  Eigen::VectorXd se;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;

  bool covariance_valid = false;
  int information_rank = 0;
  std::vector<std::string> coef_names;
  std::vector<double> loglik_path;  // nondecreasing by line-search construction
};

struct WaldTest {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  bool significant = false;  // at the 5% level
};

struct MedianPrediction {
  double median = 0.0;
  double lower = 0.0;  // 95% delta-method interval on the log median
  double upper = 0.0;
  bool has_ci = false;
};

// Crude starting point: alpha intercept 0 (gamma = 1), beta intercept the
// log of events over midpoint-imputed exposure, psi intercept log 0.5 for
// frailty types, everything else 0. Throws NonIdentifiableError when every
// observation is right-censored.
Theta initialize(const ModelSpec& spec, const Dataset& data);

// BFGS ascent on the analytic score with Armijo backtracking; every
// accepted step has a non-decreasing log-likelihood. Covariance comes from
// the inverse observed information at the optimum; a singular information
// matrix is reported, not fatal.
FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts = {});

// Maps coefficients of a previous fit onto a new spec by (component,
// column); unmatched coefficients start at 0 (psi intercept at log 0.5
// when the source had no frailty block).
Theta warm_start(const ModelSpec& from_spec, const Theta& from, const ModelSpec& to_spec);

std::vector<std::string> coefficient_names(const ModelSpec& spec,
                                           const std::vector<std::string>& columns);

// z = estimate/se with two-sided normal p-values. Throws when the
// covariance is invalid.
std::vector<WaldTest> wald_tests(const FitResult& fit);

// Median survival for one covariate row with a 95% CI from the delta
// method on the log median; the CI is omitted when the covariance is
// invalid.
MedianPrediction predict_median(const FitResult& fit, const Eigen::VectorXd& row);

}  // namespace icmpr
