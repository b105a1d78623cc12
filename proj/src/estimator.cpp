#include "icmpr/estimator.hpp"

#include "icmpr/errors.hpp"
#include "icmpr/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace icmpr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ975 = 1.959963984540054;

double loglik_or_reject(const ModelSpec& spec, const Dataset& data, const Eigen::VectorXd& x) {
  try {
    const double v = log_likelihood(spec, Theta::unpack(spec, x), data).value;
    return std::isnan(v) ? kNegInf : v;
  } catch (const std::invalid_argument&) {
    return kNegInf;
  }
}

}  // namespace

Theta initialize(const ModelSpec& spec, const Dataset& data) {
  spec.validate(data.n_columns());
  int events = 0;
  double exposure = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    if (std::isinf(data.right[i])) {
      exposure += data.left[i];
    } else {
      ++events;
      exposure += 0.5 * (data.left[i] + data.right[i]);
    }
  }
  if (events == 0)
    throw NonIdentifiableError("every observation is right-censored");
  Theta t = Theta::zeros(spec);
  t.beta[0] = std::log(events / exposure);
  if (has_frailty(spec.type)) t.psi[0] = std::log(0.5);
  return t;
}

FitResult fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts) {
  if (opts.max_iter <= 0 || !(opts.grad_tol > 0) || !(opts.step_tol > 0))
    throw ValidationError("fit options must be positive");

  Theta start = opts.initial ? *opts.initial : initialize(spec, data);
  Eigen::VectorXd x = start.pack();
  if (x.size() != spec.n_params()) throw ValidationError("initial theta does not match spec");

  const int k = static_cast<int>(x.size());
  double f = loglik_or_reject(spec, data, x);
  if (std::isinf(f))
    throw NonIdentifiableError("log-likelihood not finite at the starting point");

  Eigen::VectorXd g = score(spec, Theta::unpack(spec, x), data);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(k, k);

  FitResult result;
  result.spec = spec;
  result.coef_names = coefficient_names(spec, data.column_names);
  result.loglik_path.push_back(f);

  // Armijo backtracking from unit step; accepted steps never decrease f.
  auto line_search = [&](const Eigen::VectorXd& from, double f_from,
                         const Eigen::VectorXd& dir, double slope,
                         Eigen::VectorXd& x_out, double& f_out) {
    double step = 1.0;
    for (int bt = 0; bt < 60; ++bt) {
      x_out = from + step * dir;
      f_out = loglik_or_reject(spec, data, x_out);
      if (std::isfinite(f_out) && f_out >= f_from + 1e-4 * step * slope) return true;
      step *= 0.5;
    }
    return false;
  };

  Rng perturb_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  int perturbations = 0;
  bool scaled = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) break;

    Eigen::VectorXd dir = h_inv * g;
    if (dir.dot(g) <= 0.0) {  // curvature approximation lost ascent
      h_inv.setIdentity();
      scaled = false;
      dir = g;
    }

    Eigen::VectorXd x_new;
    double f_new = kNegInf;
    if (!line_search(x, f, dir, dir.dot(g), x_new, f_new)) {
      // Stalled: retry once from steepest ascent, then from a tiny seeded
      // perturbation; give up after that.
      if (!h_inv.isIdentity(0.0)) {
        h_inv.setIdentity();
        scaled = false;
        continue;
      }
      if (perturbations < 2) {
        ++perturbations;
        Eigen::VectorXd jiggled = x;
        for (int j = 0; j < k; ++j) jiggled[j] += perturb_rng.normal(0.0, 1e-4);
        const double f_j = loglik_or_reject(spec, data, jiggled);
        if (std::isfinite(f_j)) {
          x = jiggled;
          f = f_j;
          g = score(spec, Theta::unpack(spec, x), data);
          h_inv.setIdentity();
          scaled = false;
          continue;
        }
      }
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd g_new = score(spec, Theta::unpack(spec, x_new), data);
    const Eigen::VectorXd y = g_new - g;

    x = x_new;
    f = f_new;
    g = g_new;
    result.loglik_path.push_back(f);

    // BFGS inverse update on the negated problem: with ys = -y's < 0 the
    // standard curvature condition becomes y's < 0 for ascent.
    const double ys = y.dot(s);
    if (-ys > 1e-10 * y.norm() * s.norm()) {
      if (!scaled) {
        // Shanno-Phua scaling fixes the unit of the first inverse Hessian.
        h_inv = (-ys / y.squaredNorm()) * Eigen::MatrixXd::Identity(k, k);
        scaled = true;
      }
      const double rho = 1.0 / (-ys);
      const Eigen::MatrixXd outer = s * y.transpose() * rho;
      h_inv = (Eigen::MatrixXd::Identity(k, k) + outer) * h_inv *
                  (Eigen::MatrixXd::Identity(k, k) + outer.transpose()) +
              rho * s * s.transpose();
    }

    if (s.lpNorm<Eigen::Infinity>() < opts.step_tol * (1.0 + x.lpNorm<Eigen::Infinity>()))
      break;
  }

  // Newton polish: BFGS is stopped by step_tol well before the score meets
  // grad_tol when the information scale is large (steps ~ g/n). The
  // remaining likelihood gain sits below the rounding noise of evaluating
  // it, so acceptance is on the score norm itself, braked so the
  // log-likelihood cannot materially decrease.
  for (int polish = 0; polish < 12 && iter < opts.max_iter; ++polish) {
    const double g_norm = g.lpNorm<Eigen::Infinity>();
    if (g_norm < opts.grad_tol) break;
    const Eigen::MatrixXd info =
        observed_information(spec, Theta::unpack(spec, x), data);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd dir = ldlt.solve(g);
    if (!(dir.dot(g) > 0.0) || !dir.allFinite()) break;
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 10; ++bt, step *= 0.5) {
      const Eigen::VectorXd x_new = x + step * dir;
      const double f_new = loglik_or_reject(spec, data, x_new);
      if (!std::isfinite(f_new) || f_new < f - 1e-11 * (1.0 + std::abs(f))) continue;
      const Eigen::VectorXd g_new = score(spec, Theta::unpack(spec, x_new), data);
      if (g_new.lpNorm<Eigen::Infinity>() >= g_norm) continue;
      x = x_new;
      g = g_new;
      if (f_new >= f) result.loglik_path.push_back(f_new);
      f = f_new;
      accepted = true;
      break;
    }
    if (!accepted) break;
    ++iter;
  }

  result.theta_hat = Theta::unpack(spec, x);
  result.loglik = f;
  result.iterations = iter;
  result.grad_norm = g.lpNorm<Eigen::Infinity>();
  result.converged = result.grad_norm < opts.grad_tol;

  const Eigen::MatrixXd info = observed_information(spec, result.theta_hat, data);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  result.information_rank = static_cast<int>(lu.rank());
  result.se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  if (lu.isInvertible()) {
    result.covariance = lu.inverse();
    result.covariance_valid = (result.covariance.diagonal().array() > 0.0).all();
    if (result.covariance_valid) result.se = result.covariance.diagonal().array().sqrt();
  } else {
    result.covariance = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    result.covariance_valid = false;
  }
  return result;
}

Theta warm_start(const ModelSpec& from_spec, const Theta& from, const ModelSpec& to_spec) {
  Theta t = Theta::zeros(to_spec);
  auto copy_block = [](const std::vector<int>& from_idx, const Eigen::VectorXd& src,
                       const std::vector<int>& to_idx, Eigen::VectorXd& dst) {
    dst[0] = src[0];
    for (std::size_t j = 0; j < to_idx.size(); ++j)
      for (std::size_t i = 0; i < from_idx.size(); ++i)
        if (from_idx[i] == to_idx[j]) dst[j + 1] = src[i + 1];
  };
  copy_block(from_spec.scale_idx, from.beta, to_spec.scale_idx, t.beta);
  copy_block(from_spec.shape_idx, from.alpha, to_spec.shape_idx, t.alpha);
  if (has_frailty(to_spec.type)) {
    if (has_frailty(from_spec.type))
      copy_block(from_spec.disp_idx, from.psi, to_spec.disp_idx, t.psi);
    else
      t.psi[0] = std::log(0.5);
  }
  return t;
}

std::vector<std::string> coefficient_names(const ModelSpec& spec,
                                           const std::vector<std::string>& columns) {
  auto name_of = [&](int idx) {
    return idx < static_cast<int>(columns.size()) ? columns[idx] : "c" + std::to_string(idx);
  };
  std::vector<std::string> names;
  names.push_back("scale.intercept");
  for (int j : spec.scale_idx) names.push_back("scale." + name_of(j));
  names.push_back("shape.intercept");
  for (int j : spec.shape_idx) names.push_back("shape." + name_of(j));
  if (has_frailty(spec.type)) {
    names.push_back("frailty.intercept");
    for (int j : spec.disp_idx) names.push_back("frailty." + name_of(j));
  }
  return names;
}

std::vector<WaldTest> wald_tests(const FitResult& fit) {
  if (!fit.covariance_valid)
    throw std::runtime_error("Wald tests require a valid covariance matrix");
  const Eigen::VectorXd est = fit.theta_hat.pack();
  std::vector<WaldTest> tests(est.size());
  for (int j = 0; j < est.size(); ++j) {
    WaldTest& t = tests[j];
    t.name = j < static_cast<int>(fit.coef_names.size()) ? fit.coef_names[j] : "";
    t.estimate = est[j];
    t.se = fit.se[j];
    t.z = est[j] / fit.se[j];
    t.p = std::erfc(std::abs(t.z) / std::sqrt(2.0));
    t.significant = t.p < 0.05;
  }
  return tests;
}

MedianPrediction predict_median(const FitResult& fit, const Eigen::VectorXd& row) {
  MedianPrediction out;
  const Eigen::VectorXd x0 = fit.theta_hat.pack();
  out.median = median_time(evaluate_parameters(fit.spec, fit.theta_hat, row));
  if (!fit.covariance_valid) return out;

  auto log_median_at = [&](const Eigen::VectorXd& x) {
    return std::log(median_time(evaluate_parameters(fit.spec, Theta::unpack(fit.spec, x), row)));
  };
  Eigen::VectorXd grad(x0.size());
  Eigen::VectorXd x = x0;
  for (int j = 0; j < x0.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[j]));
    x[j] = x0[j] + h;
    const double up = log_median_at(x);
    x[j] = x0[j] - h;
    const double down = log_median_at(x);
    x[j] = x0[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  const double var = grad.dot(fit.covariance * grad);
  if (!(var >= 0.0) || !std::isfinite(var)) return out;
  const double half_width = kZ975 * std::sqrt(var);
  out.lower = out.median * std::exp(-half_width);
  out.upper = out.median * std::exp(half_width);
  out.has_ci = true;
  return out;
}

}  // namespace icmpr
