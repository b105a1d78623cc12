#include "icmpr/simulation.hpp"

#include "icmpr/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace icmpr {

namespace {

constexpr std::uint64_t kStreamMeanSurvival = 0x8000000000000001ull;
constexpr std::uint64_t kStreamCalibration = 0x8000000000000002ull;

using Gauss128 = boost::math::quadrature::gauss<double, 128>;

std::vector<ParamTriple> draw_parameter_sample(const ModelSpec& spec, const Theta& truth,
                                               const std::vector<CovariateGenerator>& gens,
                                               Rng& rng, int n_draws) {
  const bool uses_covariates =
      !spec.scale_idx.empty() || !spec.shape_idx.empty() || !spec.disp_idx.empty();
  if (!uses_covariates) n_draws = 1;
  std::vector<ParamTriple> sample;
  sample.reserve(n_draws);
  for (int i = 0; i < n_draws; ++i) {
    const Eigen::VectorXd row = draw_covariate_row(gens, rng);
    ParamTriple p = evaluate_parameters(spec, truth, row);
    if (p.phi > 0.0 && p.gamma <= p.phi * (1.0 + 1e-9))
      throw std::domain_error("marginal survival mean diverges: gamma <= phi");
    sample.push_back(p);
  }
  return sample;
}

}  // namespace

std::vector<CovariateGenerator> default_covariate_generators() {
  CovariateGenerator x1;
  x1.kind = CovariateGenerator::Kind::Bernoulli;
  x1.name = "x1";
  x1.p = 0.5;
  CovariateGenerator x2;
  x2.kind = CovariateGenerator::Kind::Normal;
  x2.name = "x2";
  x2.mean = 0.0;
  x2.sd = 0.5;
  return {x1, x2};
}

void Scenario::validate() const {
  if (n < 2) throw ValidationError("scenario requires n >= 2");
  if (!(d > 0)) throw ValidationError("scenario requires d > 0");
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("scenario requires 0 <= p < 1");
  if (replicates < 1) throw ValidationError("scenario requires replicates >= 1");
  spec.validate(static_cast<int>(covariates.size()));
  Theta::unpack(spec, truth.pack());  // shape check
}

double draw_frailty(double phi, Rng& rng) {
  if (!(phi > 0)) throw std::domain_error("draw_frailty requires phi > 0");
  return rng.gamma_rate(1.0 / phi, 1.0 / phi);
}

double draw_survival_time(const ParamTriple& p, double u, Rng& rng) {
  const double v = rng.uniform();
  return std::pow(-std::log(v) / (u * p.lambda), 1.0 / p.gamma);
}

Interval interval_from_uniforms(double t, double c, double u1, double u2) {
  Interval iv;
  iv.a = std::max(0.0, std::max(t - u1, t + u2 - c));
  iv.b = std::min(t + u2, t - u1 + c);
  return iv;
}

Interval make_interval(double t, double c, Rng& rng) {
  if (!(t >= 0) || !(c > 0)) throw std::domain_error("make_interval requires t >= 0, c > 0");
  return interval_from_uniforms(t, c, rng.uniform(0.0, c), rng.uniform(0.0, c));
}

Eigen::VectorXd draw_covariate_row(const std::vector<CovariateGenerator>& gens, Rng& rng) {
  Eigen::VectorXd row(gens.size());
  for (std::size_t j = 0; j < gens.size(); ++j) {
    const CovariateGenerator& g = gens[j];
    row[j] = g.kind == CovariateGenerator::Kind::Bernoulli
                 ? (rng.uniform() < g.p ? 1.0 : 0.0)
                 : rng.normal(g.mean, g.sd);
  }
  return row;
}

double mean_survival(const ModelSpec& spec, const Theta& truth,
                     const std::vector<CovariateGenerator>& gens, Rng& rng,
                     int n_covariate_draws) {
  const auto sample = draw_parameter_sample(spec, truth, gens, rng, n_covariate_draws);
  boost::math::quadrature::exp_sinh<double> integrator;
  double total = 0.0;
  for (const ParamTriple& p : sample) {
    total += integrator.integrate([&](double t) { return marginal_survivor(p, t); }, 1e-9);
  }
  return total / static_cast<double>(sample.size());
}

double calibrate_censoring(double p, const ModelSpec& spec, const Theta& truth,
                           const std::vector<CovariateGenerator>& gens, Rng& rng,
                           int n_covariate_draws) {
  if (p <= 0.0) return 0.0;
  if (!(p < 1.0)) throw ValidationError("censoring proportion must lie in [0, 1)");

  const auto sample = draw_parameter_sample(spec, truth, gens, rng, n_covariate_draws);

  // P(C < T) = E_x int_0^inf S_m(t;x) eta exp(-eta t) dt; substituting
  // v = exp(-eta t) maps it onto (0, 1) for fixed-node quadrature.
  auto censored_fraction = [&](double log_eta) {
    const double eta = std::exp(log_eta);
    auto integrand = [&](double v) {
      const double t = -std::log(v) / eta;
      double total = 0.0;
      for (const ParamTriple& pt : sample) total += marginal_survivor(pt, t);
      return total / static_cast<double>(sample.size());
    };
    return Gauss128::integrate(integrand, 0.0, 1.0);
  };
  auto j_function = [&](double log_eta) {
    const double dev = censored_fraction(log_eta) - p;
    return dev * dev;
  };

  // The censored fraction is increasing in eta, so expanding until it
  // straddles p brackets the J minimum.
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < 60 && censored_fraction(lo) > p; ++i) lo -= 2.0;
  for (int i = 0; i < 60 && censored_fraction(hi) < p; ++i) hi += 2.0;
  lo -= 2.0;
  hi += 2.0;

  const double inv_golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_golden * (hi - lo);
  double x2 = lo + inv_golden * (hi - lo);
  double f1 = j_function(x1);
  double f2 = j_function(x2);
  while (hi - lo > 1e-9) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_golden * (hi - lo);
      f1 = j_function(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_golden * (hi - lo);
      f2 = j_function(x2);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

SimulationPlan prepare(const Scenario& scenario) {
  scenario.validate();
  SimulationPlan plan;
  plan.scenario = scenario;
  Rng base(scenario.seed);
  Rng et_rng = base.fork(kStreamMeanSurvival);
  plan.expected_time =
      mean_survival(scenario.spec, scenario.truth, scenario.covariates, et_rng);
  plan.c = 1.5 * scenario.d * plan.expected_time;
  if (scenario.p > 0.0) {
    Rng cal_rng = base.fork(kStreamCalibration);
    plan.eta =
        calibrate_censoring(scenario.p, scenario.spec, scenario.truth, scenario.covariates,
                            cal_rng);
  }
  return plan;
}

Dataset simulate_dataset(const SimulationPlan& plan, std::uint64_t replicate) {
  const Scenario& sc = plan.scenario;
  Rng rng = Rng(sc.seed).fork(replicate);
  const bool frail = has_frailty(sc.spec.type);

  Dataset data;
  data.left.resize(sc.n);
  data.right.resize(sc.n);
  data.covariates.resize(sc.n, static_cast<int>(sc.covariates.size()));
  for (const auto& g : sc.covariates) data.column_names.push_back(g.name);

  for (int i = 0; i < sc.n; ++i) {
    const Eigen::VectorXd row = draw_covariate_row(sc.covariates, rng);
    data.covariates.row(i) = row;
    const ParamTriple p = evaluate_parameters(sc.spec, sc.truth, row);
    const double u = frail ? draw_frailty(p.phi, rng) : 1.0;
    const double t = draw_survival_time(p, u, rng);
    const double censor_time =
        plan.eta > 0.0 ? rng.exponential(plan.eta) : std::numeric_limits<double>::infinity();
    if (censor_time < t) {
      data.left[i] = censor_time;
      data.right[i] = std::numeric_limits<double>::infinity();
    } else {
      const Interval iv = make_interval(t, plan.c, rng);
      data.left[i] = iv.a;
      data.right[i] = iv.b;
    }
  }
  return data;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Truth values on the fit layout; coefficients with no counterpart in the
// generating model are 0, except the whole psi block when the truth has no
// frailty at all (there is no true value to compare against).
Eigen::VectorXd truth_on_fit_layout(const ModelSpec& truth_spec, const Theta& truth,
                                    const ModelSpec& fit_spec) {
  Theta t = Theta::zeros(fit_spec);
  auto copy_block = [](const std::vector<int>& from_idx, const Eigen::VectorXd& src,
                       const std::vector<int>& to_idx, Eigen::VectorXd& dst) {
    dst[0] = src[0];
    for (std::size_t j = 0; j < to_idx.size(); ++j)
      for (std::size_t i = 0; i < from_idx.size(); ++i)
        if (from_idx[i] == to_idx[j]) dst[j + 1] = src[i + 1];
  };
  copy_block(truth_spec.scale_idx, truth.beta, fit_spec.scale_idx, t.beta);
  copy_block(truth_spec.shape_idx, truth.alpha, fit_spec.shape_idx, t.alpha);
  if (has_frailty(fit_spec.type)) {
    if (has_frailty(truth_spec.type)) {
      copy_block(truth_spec.disp_idx, truth.psi, fit_spec.disp_idx, t.psi);
    } else {
      t.psi.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return t.pack();
}

}  // namespace

StudySummary run_study(const Scenario& scenario, const ModelSpec& fit_spec,
                       const FitOptions& opts) {
  const SimulationPlan plan = prepare(scenario);
  const int k = fit_spec.n_params();

  StudySummary summary;
  summary.replicates = scenario.replicates;
  std::vector<std::vector<double>> estimates(k), model_ses(k);
  std::vector<double> phi_estimates;
  std::vector<double> censored_fractions;
  std::vector<std::string> names;

  for (int r = 0; r < scenario.replicates; ++r) {
    const Dataset data = simulate_dataset(plan, static_cast<std::uint64_t>(r));
    censored_fractions.push_back(static_cast<double>(data.n_right_censored()) / data.n());
    FitResult fr;
    try {
      fr = fit(fit_spec, data, opts);
    } catch (const NonIdentifiableError&) {
      continue;
    }
    if (!fr.converged) continue;
    ++summary.converged;
    if (names.empty()) names = fr.coef_names;
    const Eigen::VectorXd est = fr.theta_hat.pack();
    for (int j = 0; j < k; ++j) {
      estimates[j].push_back(est[j]);
      if (fr.covariance_valid && std::isfinite(fr.se[j])) model_ses[j].push_back(fr.se[j]);
    }
    if (has_frailty(fit_spec.type)) phi_estimates.push_back(std::exp(fr.theta_hat.psi[0]));
  }

  summary.convergence_rate =
      static_cast<double>(summary.converged) / static_cast<double>(scenario.replicates);
  summary.mean_censored_fraction = mean_of(censored_fractions);

  const Eigen::VectorXd truth = truth_on_fit_layout(scenario.spec, scenario.truth, fit_spec);
  if (names.empty()) names = coefficient_names(fit_spec, {});
  for (int j = 0; j < k; ++j) {
    CoefficientSummary cs;
    cs.name = j < static_cast<int>(names.size()) ? names[j] : "theta" + std::to_string(j);
    cs.truth = truth[j];
    cs.median_estimate = median_of(estimates[j]);
    cs.empirical_se = sd_of(estimates[j]);
    cs.mean_model_se = mean_of(model_ses[j]);
    if (truth[j] != 0.0 && std::isfinite(truth[j])) {
      std::vector<double> biases;
      for (double e : estimates[j]) biases.push_back(100.0 * (e - truth[j]) / truth[j]);
      cs.percent_bias = mean_of(biases);
    } else {
      cs.percent_bias = std::numeric_limits<double>::quiet_NaN();
    }
    summary.coefficients.push_back(std::move(cs));
  }

  if (has_frailty(fit_spec.type)) {
    CoefficientSummary cs;
    cs.name = "phi";
    cs.truth = has_frailty(scenario.spec.type) ? std::exp(scenario.truth.psi[0])
                                               : std::numeric_limits<double>::quiet_NaN();
    cs.median_estimate = median_of(phi_estimates);
    cs.empirical_se = sd_of(phi_estimates);
    cs.mean_model_se = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(cs.truth) && cs.truth != 0.0) {
      std::vector<double> biases;
      for (double e : phi_estimates) biases.push_back(100.0 * (e - cs.truth) / cs.truth);
      cs.percent_bias = mean_of(biases);
    } else {
      cs.percent_bias = std::numeric_limits<double>::quiet_NaN();
    }
    summary.coefficients.push_back(std::move(cs));
  }
  return summary;
}

}  // namespace icmpr
