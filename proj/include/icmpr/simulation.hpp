#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/estimator.hpp"
#include "icmpr/model.hpp"
#include "icmpr/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace icmpr {

struct CovariateGenerator {
  enum class Kind { Bernoulli, Normal };
  Kind kind = Kind::Bernoulli;
  std::string name;
  double p = 0.5;     // Bernoulli success probability
  double mean = 0.0;  // Normal location
  double sd = 1.0;    // Normal scale
};

// x1 ~ Bernoulli(0.5), x2 ~ Normal(0, sd 0.5).
std::vector<CovariateGenerator> default_covariate_generators();

struct Scenario {
  int n = 0;
  ModelSpec spec;  // truth model
  Theta truth;
  double d = 0.1;         // mean inspection length as a fraction of E(T)
  double p = 0.0;         // target right-censoring proportion
  int replicates = 1;
  std::uint64_t seed = 1;
  std::vector<CovariateGenerator> covariates = default_covariate_generators();

  void validate() const;
};

// Gamma frailty draw with shape = rate = 1/phi, so E(U) = 1, Var(U) = phi.
double draw_frailty(double phi, Rng& rng);

// Inverse-transform draw from the conditional survivor exp(-u*Lambda(t)).
double draw_survival_time(const ParamTriple& p, double u, Rng& rng);

struct Interval {
  double a = 0.0;
  double b = 0.0;
};

// a = max(T-u1, T+u2-c), b = min(T+u2, T-u1+c) with u1, u2 ~ U(0, c); the
// construction keeps T in (a, b], b-a <= c and E(b-a) = 2c/3. a is clamped
// at 0 since times are nonnegative.
Interval interval_from_uniforms(double t, double c, double u1, double u2);
Interval make_interval(double t, double c, Rng& rng);

Eigen::VectorXd draw_covariate_row(const std::vector<CovariateGenerator>& gens, Rng& rng);

// E(T) = E_x integral of S_m(t; x) dt, Monte Carlo over the covariate
// distribution with quadrature in t. Throws when the marginal tail is too
// heavy to integrate (gamma <= phi).
double mean_survival(const ModelSpec& spec, const Theta& truth,
                     const std::vector<CovariateGenerator>& gens, Rng& rng,
                     int n_covariate_draws = 10000);

// Exponential censoring rate calibrated so the expected censored fraction
// equals p: minimizes ( E_x int S_m(t;x) g(t;eta) dt - p )^2 over log eta
// by golden-section search. p = 0 disables censoring (returns 0).
double calibrate_censoring(double p, const ModelSpec& spec, const Theta& truth,
                           const std::vector<CovariateGenerator>& gens, Rng& rng,
                           int n_covariate_draws = 10000);

// Scenario with its derived constants: c = (3d/2) E(T) and the calibrated
// censoring rate.
struct SimulationPlan {
  Scenario scenario;
  double expected_time = 0.0;
  double c = 0.0;
  double eta = 0.0;
};

SimulationPlan prepare(const Scenario& scenario);

// One replicate dataset from the plan's stream (seed, replicate).
Dataset simulate_dataset(const SimulationPlan& plan, std::uint64_t replicate);

struct CoefficientSummary {
  std::string name;
  double truth = 0.0;
  double median_estimate = 0.0;
  double empirical_se = 0.0;   // SD of estimates across converged replicates
  double percent_bias = 0.0;   // mean of 100*(est-truth)/truth
  double mean_model_se = 0.0;  // mean of the model-based SEs, for comparison
};

struct StudySummary {
  std::vector<CoefficientSummary> coefficients;
  int replicates = 0;
  int converged = 0;
  double convergence_rate = 0.0;
  double mean_censored_fraction = 0.0;
};

// Fits fit_spec to every replicate and aggregates over the converged ones.
// Frailty fits get a derived "phi" row on the natural scale, exp(psi_0),
// matching how the variance itself is usually read.
StudySummary run_study(const Scenario& scenario, const ModelSpec& fit_spec,
                       const FitOptions& opts = {});

}  // namespace icmpr
