#include "icmpr/turnbull.hpp"

#include "icmpr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace icmpr {

std::pair<double, double> TurnbullEstimate::survivor_band(double t) const {
  double upper = 0.0, lower = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (support[j].right > t) upper += masses[j];
    if (support[j].left >= t) lower += masses[j];
  }
  return {upper, lower};
}

std::vector<SupportInterval> turnbull_support(const Dataset& data) {
  data.validate();
  std::set<double> lefts, rights;
  for (int i = 0; i < data.n(); ++i) {
    lefts.insert(data.left[i]);
    if (std::isfinite(data.right[i])) rights.insert(data.right[i]);
  }
  if (rights.empty())
    throw NonIdentifiableError("no finite interval: Turnbull support is empty");

  // Sorted unique endpoints; a maximal intersection is a left endpoint
  // immediately followed by a right endpoint.
  std::set<double> all;
  all.insert(lefts.begin(), lefts.end());
  all.insert(rights.begin(), rights.end());
  std::vector<double> values(all.begin(), all.end());

  std::vector<SupportInterval> support;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    if (lefts.count(values[k]) && rights.count(values[k + 1]))
      support.push_back({values[k], values[k + 1]});
  }
  return support;
}

TurnbullEstimate turnbull_fit(const Dataset& data, double tol, int max_iter) {
  TurnbullEstimate est;
  est.support = turnbull_support(data);
  const int m = static_cast<int>(est.support.size());

  // For each observation, the support intervals it contains form a
  // contiguous [lo, hi) range because the support is ordered and disjoint.
  std::vector<std::pair<int, int>> ranges;
  for (int i = 0; i < data.n(); ++i) {
    int lo = 0;
    while (lo < m && est.support[lo].left < data.left[i]) ++lo;
    int hi = lo;
    while (hi < m && est.support[hi].right <= data.right[i]) ++hi;
    if (lo >= hi) {
      est.dropped_observations.push_back(i);
    } else {
      ranges.emplace_back(lo, hi);
    }
  }
  const double n_used = static_cast<double>(ranges.size());
  if (n_used == 0) throw NonIdentifiableError("every observation was dropped");

  Eigen::VectorXd q = Eigen::VectorXd::Constant(m, 1.0 / m);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m);
    double loglik = 0.0;
    for (const auto& [lo, hi] : ranges) {
      const double denom = q.segment(lo, hi - lo).sum();
      loglik += std::log(denom);
      next.segment(lo, hi - lo) += q.segment(lo, hi - lo) / denom;
    }
    next /= n_used;
    next /= next.sum();  // guard against rounding drift across many sweeps
    est.loglik_path.push_back(loglik);

    est.final_change = (next - q).lpNorm<Eigen::Infinity>();
    q = next;
    est.iterations = it + 1;
    if (est.final_change < tol) {
      est.converged = true;
      break;
    }
  }
  est.masses = q;
  return est;
}

}  // namespace icmpr
