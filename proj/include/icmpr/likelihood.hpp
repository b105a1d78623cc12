#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/model.hpp"

#include <Eigen/Dense>

#include <functional>

namespace icmpr {

struct LogLikResult {
  double value = 0.0;            // sum of per_obs
  Eigen::VectorXd per_obs;       // log pi_i, each <= 0
  int degenerate_count = 0;      // observations whose interval probability underflowed
};

// log[S_m(a) - S_m(b)] for the interval (a, b]; b = +inf gives log S_m(a).
// Computed as log S_m(a) + log1p(-exp(log S_m(b) - log S_m(a))) so deep
// right tails survive. Degenerate intervals (S_m(a) == S_m(b) to machine
// precision) return -inf.
double log_interval_prob(const ParamTriple& p, double a, double b);

LogLikResult log_likelihood(const ModelSpec& spec, const Theta& theta, const Dataset& data);

// Analytic score (U(beta), U(alpha), U(psi)) packed in Theta layout. The
// three blocks share one structure and differ only in the omega weight:
//   omega_beta(t)  = Lambda(t)
//   omega_alpha(t) = gamma * Lambda(t) * log t          (0 at t = 0)
//   omega_psi(t)   = Lambda(t) + (1+phi*Lambda) * log S_m(t)
// Right-censored b contributes nothing: S_m(b)^(1+phi) * omega(b) -> 0.
Eigen::VectorXd score(const ModelSpec& spec, const Theta& theta, const Dataset& data);

// Negative symmetrized Jacobian of a gradient field by central differences:
// H = -(J + J')/2 with per-coordinate step rel_step*max(1, |x_j|). Exposed
// so tests can drive it with gradients whose Hessian is known exactly.
Eigen::MatrixXd neg_jacobian_symmetrized(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    const Eigen::VectorXd& x0, double rel_step = 6.06e-6);

// Observed information -d2l/dtheta dtheta' via central differences of the
// analytic score. Returned even when singular; callers rank-check before
// inverting.
Eigen::MatrixXd observed_information(const ModelSpec& spec, const Theta& theta,
                                     const Dataset& data);

}  // namespace icmpr
