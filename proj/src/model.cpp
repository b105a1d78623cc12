#include "icmpr/model.hpp"

#include "icmpr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace icmpr {

namespace {
constexpr double kPhiExpansionThreshold = 1e-8;
constexpr double kLog2 = 0.6931471805599453094;
}  // namespace

bool has_shape_regression(ModelType t) {
  return t == ModelType::MPR || t == ModelType::MPRF || t == ModelType::MPRDM;
}

bool has_frailty(ModelType t) {
  return t == ModelType::PHF || t == ModelType::PHDM || t == ModelType::MPRF ||
         t == ModelType::MPRDM;
}

bool has_dispersion_regression(ModelType t) {
  return t == ModelType::PHDM || t == ModelType::MPRDM;
}

std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::PH: return "PH";
    case ModelType::PHF: return "PHF";
    case ModelType::PHDM: return "PHDM";
    case ModelType::MPR: return "MPR";
    case ModelType::MPRF: return "MPRF";
    case ModelType::MPRDM: return "MPRDM";
  }
  return "?";
}

ModelType model_type_from_string(const std::string& name) {
  if (name == "PH") return ModelType::PH;
  if (name == "PHF") return ModelType::PHF;
  if (name == "PHDM") return ModelType::PHDM;
  if (name == "MPR") return ModelType::MPR;
  if (name == "MPRF") return ModelType::MPRF;
  if (name == "MPRDM") return ModelType::MPRDM;
  throw ValidationError("unknown model type '" + name + "'");
}

int ModelSpec::n_params() const {
  int k = 1 + static_cast<int>(scale_idx.size()) + 1 + static_cast<int>(shape_idx.size());
  if (has_frailty(type)) k += 1 + static_cast<int>(disp_idx.size());
  return k;
}

namespace {
void check_indices(const std::vector<int>& idx, int n_columns, const char* component) {
  std::set<int> seen;
  for (int j : idx) {
    if (j < 0 || j >= n_columns)
      throw ValidationError(std::string(component) + " index " + std::to_string(j) +
                            " outside [0, " + std::to_string(n_columns) + ")");
    if (!seen.insert(j).second)
      throw ValidationError(std::string(component) + " index " + std::to_string(j) +
                            " appears twice");
  }
}
}  // namespace

void ModelSpec::validate(int n_columns) const {
  if (!has_shape_regression(type) && !shape_idx.empty())
    throw ValidationError("model type " + to_string(type) + " has no shape regression");
  if (!has_dispersion_regression(type) && !disp_idx.empty())
    throw ValidationError("model type " + to_string(type) + " has no dispersion regression");
  check_indices(scale_idx, n_columns, "scale");
  check_indices(shape_idx, n_columns, "shape");
  check_indices(disp_idx, n_columns, "dispersion");
}

Eigen::VectorXd Theta::pack() const {
  Eigen::VectorXd out(dim());
  out << beta, alpha, psi;
  return out;
}

Theta Theta::unpack(const ModelSpec& spec, const Eigen::VectorXd& packed) {
  const int nb = 1 + static_cast<int>(spec.scale_idx.size());
  const int na = 1 + static_cast<int>(spec.shape_idx.size());
  const int np = has_frailty(spec.type) ? 1 + static_cast<int>(spec.disp_idx.size()) : 0;
  if (packed.size() != nb + na + np)
    throw ValidationError("packed theta has length " + std::to_string(packed.size()) +
                          ", spec requires " + std::to_string(nb + na + np));
  Theta t;
  t.beta = packed.segment(0, nb);
  t.alpha = packed.segment(nb, na);
  t.psi = packed.segment(nb + na, np);
  return t;
}

Theta Theta::zeros(const ModelSpec& spec) {
  return unpack(spec, Eigen::VectorXd::Zero(spec.n_params()));
}

namespace {
double linear_predictor(const Eigen::VectorXd& coef, const std::vector<int>& idx,
                        const Eigen::VectorXd& row) {
  double lp = coef[0];
  for (std::size_t j = 0; j < idx.size(); ++j) lp += coef[j + 1] * row[idx[j]];
  return lp;
}
}  // namespace

ParamTriple evaluate_parameters(const ModelSpec& spec, const Theta& theta,
                                const Eigen::VectorXd& row) {
  for (int j : spec.scale_idx)
    if (j >= row.size()) throw ValidationError("covariate row too short for spec");
  for (int j : spec.shape_idx)
    if (j >= row.size()) throw ValidationError("covariate row too short for spec");
  for (int j : spec.disp_idx)
    if (j >= row.size()) throw ValidationError("covariate row too short for spec");

  const double lp_scale = linear_predictor(theta.beta, spec.scale_idx, row);
  const double lp_shape = linear_predictor(theta.alpha, spec.shape_idx, row);
  if (!std::isfinite(lp_scale) || !std::isfinite(lp_shape))
    throw std::invalid_argument("non-finite linear predictor");

  ParamTriple p;
  p.lambda = std::exp(lp_scale);
  p.gamma = std::exp(lp_shape);
  if (has_frailty(spec.type)) {
    const double lp_disp = linear_predictor(theta.psi, spec.disp_idx, row);
    if (!std::isfinite(lp_disp)) throw std::invalid_argument("non-finite linear predictor");
    p.phi = std::exp(lp_disp);
  } else {
    p.phi = 0.0;
  }
  return p;
}

double hazard(const ParamTriple& p, double t) {
  if (!(t > 0)) throw std::domain_error("hazard requires t > 0");
  return p.lambda * p.gamma * std::pow(t, p.gamma - 1.0);
}

double cum_hazard(const ParamTriple& p, double t) {
  if (t < 0) throw std::domain_error("cum_hazard requires t >= 0");
  if (t == 0.0) return 0.0;
  return p.lambda * std::pow(t, p.gamma);
}

double log_marginal_survivor(const ParamTriple& p, double t) {
  const double L = cum_hazard(p, t);
  if (std::isinf(L)) return -std::numeric_limits<double>::infinity();
  if (p.phi >= kPhiExpansionThreshold) return -std::log1p(p.phi * L) / p.phi;
  return -L * (1.0 - 0.5 * p.phi * L);
}

double marginal_survivor(const ParamTriple& p, double t) {
  return std::exp(log_marginal_survivor(p, t));
}

double marginal_hazard(const ParamTriple& p, double t) {
  if (!(t > 0)) throw std::domain_error("marginal_hazard requires t > 0");
  if (p.phi == 0.0) return hazard(p, t);
  return hazard(p, t) * std::exp(p.phi * log_marginal_survivor(p, t));
}

double median_time(const ParamTriple& p) {
  // (2^phi - 1)/phi -> log 2 as phi -> 0; expm1 keeps the ratio stable.
  const double target = p.phi > 0.0 ? std::expm1(p.phi * kLog2) / p.phi : kLog2;
  return std::pow(target / p.lambda, 1.0 / p.gamma);
}

}  // namespace icmpr
