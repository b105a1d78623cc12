#pragma once

#include "icmpr/dataset.hpp"
#include "icmpr/model.hpp"
#include "icmpr/rng.hpp"
#include "icmpr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace icmpr::testing {

// Spec using the first columns in every applicable component.
inline ModelSpec spec_for(ModelType type, int n_scale, int n_shape, int n_disp) {
  ModelSpec spec;
  spec.type = type;
  for (int j = 0; j < n_scale; ++j) spec.scale_idx.push_back(j);
  if (has_shape_regression(type))
    for (int j = 0; j < n_shape; ++j) spec.shape_idx.push_back(j);
  if (has_dispersion_regression(type))
    for (int j = 0; j < n_disp; ++j) spec.disp_idx.push_back(j);
  return spec;
}

// Coefficients kept moderate so gamma stays within a factor e of 1 and the
// intervals remain informative.
inline Theta random_theta(const ModelSpec& spec, Rng& rng) {
  Theta t = Theta::zeros(spec);
  t.beta[0] = rng.normal(0.0, 0.5);
  for (int j = 1; j < t.beta.size(); ++j) t.beta[j] = rng.normal(0.0, 0.3);
  t.alpha[0] = rng.normal(0.0, 0.3);
  for (int j = 1; j < t.alpha.size(); ++j) t.alpha[j] = rng.normal(0.0, 0.2);
  if (t.psi.size() > 0) {
    t.psi[0] = rng.normal(-0.7, 0.3);
    for (int j = 1; j < t.psi.size(); ++j) t.psi[j] = rng.normal(0.0, 0.2);
  }
  return t;
}

// Data drawn from the model itself: covariates, a frailty when the type has
// one, an event time by inverse transform, then either a right-censoring
// point below T or an interval straddling T (left ends at 0 occasionally).
inline Dataset random_dataset(const ModelSpec& spec, const Theta& theta, int n, Rng& rng,
                              double censored_fraction = 0.2, int n_columns = 2) {
  Dataset data;
  data.left.resize(n);
  data.right.resize(n);
  data.covariates.resize(n, n_columns);
  for (int j = 0; j < n_columns; ++j)
    data.column_names.push_back("x" + std::to_string(j + 1));

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_columns; ++j)
      data.covariates(i, j) = j % 2 == 0 ? (rng.uniform() < 0.5 ? 1.0 : 0.0)
                                         : rng.normal(0.0, 0.7);
    const ParamTriple p = evaluate_parameters(spec, theta, data.covariates.row(i));
    const double u = p.phi > 0.0 ? draw_frailty(p.phi, rng) : 1.0;
    const double t = draw_survival_time(p, u, rng);
    if (rng.uniform() < censored_fraction) {
      data.left[i] = t * rng.uniform();
      data.right[i] = std::numeric_limits<double>::infinity();
    } else {
      const double w1 = rng.uniform(0.0, 0.4 * t + 0.1);
      const double w2 = rng.uniform(0.0, 0.4 * t + 0.1);
      data.left[i] = std::max(0.0, t - w1);
      data.right[i] = t + w2;
    }
  }
  return data;
}

inline const std::vector<ModelType>& all_model_types() {
  static const std::vector<ModelType> types = {ModelType::PH,  ModelType::PHF,
                                               ModelType::PHDM, ModelType::MPR,
                                               ModelType::MPRF, ModelType::MPRDM};
  return types;
}

// Asymptotic Kolmogorov-Smirnov p-value.
inline double ks_pvalue(double d_stat, int n) {
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d_stat;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k)
    q += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace icmpr::testing
