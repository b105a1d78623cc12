#pragma once

#include "icmpr/dataset.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace icmpr {

// Half-open support interval (left, right].
struct SupportInterval {
  double left = 0.0;
  double right = 0.0;
};

struct TurnbullEstimate {
  std::vector<SupportInterval> support;
  Eigen::VectorXd masses;  // nonnegative, sums to 1
  bool converged = false;
  int iterations = 0;
  double final_change = 0.0;
  std::vector<int> dropped_observations;  // contained no support interval
  std::vector<double> loglik_path;        // nondecreasing across EM sweeps

  // P(T > t) bounds: the NPMLE is a step function between support
  // intervals and indeterminate inside them, so the value is reported as
  // an (upper, lower) pair; the two coincide outside the support.
  std::pair<double, double> survivor_band(double t) const;
};

// Maximal intersections: (l, r] with l an observed left endpoint, r a
// finite observed right endpoint, l < r, and no other endpoint strictly
// between. Throws NonIdentifiableError when every observation is
// right-censored.
std::vector<SupportInterval> turnbull_support(const Dataset& data);

// Self-consistency EM from a uniform start until the max mass change drops
// below tol. Observations containing no support interval are dropped with
// their indices recorded.
TurnbullEstimate turnbull_fit(const Dataset& data, double tol = 1e-8, int max_iter = 10000);

}  // namespace icmpr
