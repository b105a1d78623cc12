#include "icmpr/likelihood.hpp"

#include "icmpr/errors.hpp"

#include <cmath>
#include <limits>

namespace icmpr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double omega_beta(const ParamTriple& p, double t) { return cum_hazard(p, t); }

double omega_alpha(const ParamTriple& p, double t) {
  if (t == 0.0) return 0.0;  // lambda*gamma*t^gamma*log t -> 0 for gamma > 0
  return p.gamma * cum_hazard(p, t) * std::log(t);
}

// omega_psi = (1/phi) * [x - (1+x) log(1+x)], x = phi*Lambda. The direct
// form Lambda + (1+x) log S_m cancels catastrophically for small x, so a
// series takes over below x = 1e-8.
double omega_psi(const ParamTriple& p, double t, double log_s) {
  const double L = cum_hazard(p, t);
  const double x = p.phi * L;
  if (x < 1e-8) return -p.phi * L * L * (0.5 - x / 6.0 + x * x / 12.0);
  return L + (1.0 + x) * log_s;
}

void check_shapes(const ModelSpec& spec, const Theta& theta, const Dataset& data) {
  spec.validate(data.n_columns());
  const bool frail = has_frailty(spec.type);
  if (theta.beta.size() != 1 + static_cast<int>(spec.scale_idx.size()) ||
      theta.alpha.size() != 1 + static_cast<int>(spec.shape_idx.size()) ||
      theta.psi.size() != (frail ? 1 + static_cast<int>(spec.disp_idx.size()) : 0))
    throw ValidationError("theta layout does not match model spec");
}

}  // namespace

double log_interval_prob(const ParamTriple& p, double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) throw ValidationError("interval requires 0 <= a < b");
  if (a == b) return kNegInf;  // degenerate interval
  const double log_sa = log_marginal_survivor(p, a);
  if (std::isinf(b)) return log_sa;
  const double log_sb = log_marginal_survivor(p, b);
  const double diff = log_sb - log_sa;
  if (!(diff < 0.0)) return kNegInf;  // S_m(a) == S_m(b) to machine precision
  return log_sa + std::log1p(-std::exp(diff));
}

LogLikResult log_likelihood(const ModelSpec& spec, const Theta& theta, const Dataset& data) {
  check_shapes(spec, theta, data);
  LogLikResult r;
  r.per_obs.resize(data.n());
  for (int i = 0; i < data.n(); ++i) {
    const ParamTriple p = evaluate_parameters(spec, theta, data.covariates.row(i));
    const double lp = log_interval_prob(p, data.left[i], data.right[i]);
    if (std::isinf(lp)) ++r.degenerate_count;
    r.per_obs[i] = lp;
  }
  r.value = r.per_obs.sum();
  return r;
}

Eigen::VectorXd score(const ModelSpec& spec, const Theta& theta, const Dataset& data) {
  check_shapes(spec, theta, data);
  const bool frail = has_frailty(spec.type);
  const int nb = static_cast<int>(theta.beta.size());
  const int na = static_cast<int>(theta.alpha.size());
  const int np = static_cast<int>(theta.psi.size());

  Eigen::VectorXd g = Eigen::VectorXd::Zero(nb + na + np);
  for (int i = 0; i < data.n(); ++i) {
    const ParamTriple p = evaluate_parameters(spec, theta, data.covariates.row(i));
    const double a = data.left[i];
    const double b = data.right[i];
    const bool right_censored = std::isinf(b);

    const double log_sa = log_marginal_survivor(p, a);
    const double log_sb = right_censored ? kNegInf : log_marginal_survivor(p, b);
    // pi_i = S(a) - S(b) = S(a) * D with D in (0, 1]; dividing the
    // S^(1+phi) factors by S(a) keeps everything in exp-of-nonpositive.
    const double d = -std::expm1(log_sb - log_sa);
    const double wa = std::exp(p.phi * log_sa) / d;               // S(a)^(1+phi) / pi
    const double wb = right_censored ? 0.0
                                     : std::exp((1.0 + p.phi) * log_sb - log_sa) / d;

    // the S(b)^(1+phi) * omega(b) products vanish as b -> inf
    const double gb = (right_censored ? 0.0 : wb * omega_beta(p, b)) - wa * omega_beta(p, a);
    const double ga = (right_censored ? 0.0 : wb * omega_alpha(p, b)) - wa * omega_alpha(p, a);

    g[0] += gb;
    for (std::size_t j = 0; j < spec.scale_idx.size(); ++j)
      g[1 + j] += gb * data.covariates(i, spec.scale_idx[j]);
    g[nb] += ga;
    for (std::size_t j = 0; j < spec.shape_idx.size(); ++j)
      g[nb + 1 + j] += ga * data.covariates(i, spec.shape_idx[j]);

    if (frail) {
      const double gp = (right_censored ? 0.0 : wb * omega_psi(p, b, log_sb)) -
                        wa * omega_psi(p, a, log_sa);
      g[nb + na] += gp;
      for (std::size_t j = 0; j < spec.disp_idx.size(); ++j)
        g[nb + na + 1 + j] += gp * data.covariates(i, spec.disp_idx[j]);
    }
  }
  return g;
}

Eigen::MatrixXd neg_jacobian_symmetrized(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    const Eigen::VectorXd& x0, double rel_step) {
  const int k = static_cast<int>(x0.size());
  Eigen::MatrixXd jac(k, k);
  Eigen::VectorXd x = x0;
  for (int j = 0; j < k; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x0[j]));
    x[j] = x0[j] + h;
    const Eigen::VectorXd g_plus = gradient(x);
    x[j] = x0[j] - h;
    const Eigen::VectorXd g_minus = gradient(x);
    x[j] = x0[j];
    jac.col(j) = (g_plus - g_minus) / (2.0 * h);
  }
  return -0.5 * (jac + jac.transpose());
}

Eigen::MatrixXd observed_information(const ModelSpec& spec, const Theta& theta,
                                     const Dataset& data) {
  check_shapes(spec, theta, data);
  auto grad = [&](const Eigen::VectorXd& x) {
    return score(spec, Theta::unpack(spec, x), data);
  };
  return neg_jacobian_symmetrized(grad, theta.pack());
}

}  // namespace icmpr
