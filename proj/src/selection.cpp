#include "icmpr/selection.hpp"

#include "icmpr/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace icmpr {

InformationCriteria information_criteria(double loglik, int k, int n) {
  if (n < 1 || k < 0) throw ValidationError("information_criteria requires n >= 1, k >= 0");
  InformationCriteria ic;
  ic.aic = -2.0 * loglik + 2.0 * k;
  ic.bic = -2.0 * loglik + k * std::log(static_cast<double>(n));
  return ic;
}

ModelGridResult fit_model_grid(const Dataset& data,
                               const std::vector<CovariateStructure>& structures,
                               const std::vector<ModelType>& types, const FitOptions& opts) {
  ModelGridResult result;
  result.n = data.n();
  for (ModelType type : types) {
    for (const CovariateStructure& s : structures) {
      GridEntry e;
      e.spec.type = type;
      e.spec.scale_idx = s.scale;
      e.spec.shape_idx = has_shape_regression(type) ? s.shape : std::vector<int>{};
      e.spec.disp_idx = has_dispersion_regression(type) ? s.disp : std::vector<int>{};
      e.label = to_string(type) + "(" + s.name + ")";
      e.k = e.spec.n_params();
      try {
        const FitResult fr = fit(e.spec, data, opts);
        e.converged = fr.converged;
        e.loglik = fr.loglik;
        const InformationCriteria ic = information_criteria(fr.loglik, e.k, data.n());
        e.aic = ic.aic;
        e.bic = ic.bic;
      } catch (const NonIdentifiableError&) {
        e.converged = false;
        e.loglik = -std::numeric_limits<double>::infinity();
        e.aic = e.bic = std::numeric_limits<double>::quiet_NaN();
      }
      result.entries.push_back(std::move(e));
    }
  }

  double min_aic = std::numeric_limits<double>::infinity();
  double min_bic = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const GridEntry& e = result.entries[i];
    if (!e.converged) continue;
    if (e.aic < min_aic) {
      min_aic = e.aic;
      result.best_aic = static_cast<int>(i);
    }
    if (e.bic < min_bic) {
      min_bic = e.bic;
      result.best_bic = static_cast<int>(i);
    }
  }
  for (GridEntry& e : result.entries) {
    if (!e.converged) continue;
    e.daic = e.aic - min_aic;
    e.dbic = e.bic - min_bic;
  }

  for (ModelType type : types) {
    TypeSummary ts;
    ts.type = type;
    int count = 0;
    for (const GridEntry& e : result.entries) {
      if (e.spec.type != type || !e.converged) continue;
      ts.mean_aic += e.aic;
      ts.mean_bic += e.bic;
      ts.mean_daic += e.daic;
      ts.mean_dbic += e.dbic;
      ++count;
    }
    if (count > 0) {
      ts.mean_aic /= count;
      ts.mean_bic /= count;
      ts.mean_daic /= count;
      ts.mean_dbic /= count;
    }
    result.per_type.push_back(ts);
  }
  return result;
}

Criterion criterion_from_string(const std::string& name) {
  if (name == "AIC" || name == "aic") return Criterion::AIC;
  if (name == "BIC" || name == "bic") return Criterion::BIC;
  throw ValidationError("unknown criterion '" + name + "'");
}

namespace {

enum class Direction { Add, Drop };

struct Move {
  int covariate = 0;
  bool scale = false, shape = false, disp = false;
  Direction dir = Direction::Add;
};

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

void apply_to(std::vector<int>& idx, int cov, Direction dir) {
  if (dir == Direction::Add) {
    idx.push_back(cov);
  } else {
    idx.erase(std::remove(idx.begin(), idx.end(), cov), idx.end());
  }
}

// A move is valid only when the covariate is absent from every touched
// component (add) or present in all of them (drop).
bool move_applies(const Move& m, const ModelSpec& spec) {
  auto ok = [&](bool touched, const std::vector<int>& idx) {
    if (!touched) return true;
    return m.dir == Direction::Add ? !contains(idx, m.covariate) : contains(idx, m.covariate);
  };
  return ok(m.scale, spec.scale_idx) && ok(m.shape, spec.shape_idx) && ok(m.disp, spec.disp_idx);
}

ModelSpec apply_move(const Move& m, ModelSpec spec) {
  if (m.scale) apply_to(spec.scale_idx, m.covariate, m.dir);
  if (m.shape) apply_to(spec.shape_idx, m.covariate, m.dir);
  if (m.disp) apply_to(spec.disp_idx, m.covariate, m.dir);
  return spec;
}

std::string describe(const Move& m, const std::string& column) {
  std::string comps;
  if (m.scale) comps += "scale";
  if (m.shape) comps += comps.empty() ? "shape" : "+shape";
  if (m.disp) comps += comps.empty() ? "dispersion" : "+dispersion";
  return std::string(m.dir == Direction::Add ? "add " : "drop ") + column + " in " + comps;
}

}  // namespace

StepwiseResult stepwise(const ModelSpec& start, const Dataset& data,
                        const std::vector<int>& candidates, Criterion criterion,
                        const FitOptions& opts) {
  auto value_of = [&](double loglik, int k) {
    const InformationCriteria ic = information_criteria(loglik, k, data.n());
    return criterion == Criterion::AIC ? ic.aic : ic.bic;
  };

  StepwiseResult result;
  result.best = start;
  result.fit = fit(start, data, opts);
  if (!result.fit.converged)
    throw std::runtime_error("stepwise starting model did not converge");
  result.criterion_value = value_of(result.fit.loglik, start.n_params());

  // Component subsets in canonical order: singles, pairs, the triple.
  const bool sh = has_shape_regression(start.type);
  const bool dm = has_dispersion_regression(start.type);
  std::vector<std::array<bool, 3>> subsets;
  for (const auto& s : std::vector<std::array<bool, 3>>{{true, false, false},
                                                        {false, true, false},
                                                        {false, false, true},
                                                        {true, true, false},
                                                        {true, false, true},
                                                        {false, true, true},
                                                        {true, true, true}}) {
    if ((s[1] && !sh) || (s[2] && !dm)) continue;
    subsets.push_back(s);
  }

  const double tie_eps = 1e-9;
  while (true) {
    bool have_best = false;
    Move best_move;
    ModelSpec best_spec;
    FitResult best_fit;
    double best_value = 0.0;
    std::vector<StepwiseMove> round_log;

    for (int cov : candidates) {
      for (const auto& s : subsets) {
        for (Direction dir : {Direction::Add, Direction::Drop}) {
          Move m{cov, s[0], s[1], s[2], dir};
          if (!move_applies(m, result.best)) continue;
          ModelSpec cand = apply_move(m, result.best);

          StepwiseMove logged;
          logged.description = describe(m, data.column_names[cov]);
          logged.k = cand.n_params();
          FitOptions cand_opts = opts;
          cand_opts.initial = warm_start(result.best, result.fit.theta_hat, cand);
          FitResult fr;
          try {
            fr = fit(cand, data, cand_opts);
          } catch (const NonIdentifiableError&) {
            logged.converged = false;
            round_log.push_back(logged);
            continue;
          }
          if (!fr.converged) {
            logged.converged = false;
            logged.loglik = fr.loglik;
            round_log.push_back(logged);
            continue;
          }
          logged.loglik = fr.loglik;
          logged.criterion = value_of(fr.loglik, logged.k);
          round_log.push_back(logged);

          bool better;
          if (!have_best) {
            better = true;
          } else if (logged.criterion < best_value - tie_eps) {
            better = true;
          } else if (logged.criterion <= best_value + tie_eps) {
            better = logged.k < best_spec.n_params();
          } else {
            better = false;
          }
          if (better) {
            have_best = true;
            best_move = m;
            best_spec = cand;
            best_fit = fr;
            best_value = logged.criterion;
          }
        }
      }
    }

    if (!have_best || best_value >= result.criterion_value - tie_eps) {
      for (auto& lm : round_log) result.trace.push_back(lm);
      break;
    }
    for (auto& lm : round_log) {
      lm.accepted = lm.description == describe(best_move, data.column_names[best_move.covariate]) &&
                    std::abs(lm.criterion - best_value) <= tie_eps;
      result.trace.push_back(lm);
    }
    result.best = best_spec;
    result.fit = best_fit;
    result.criterion_value = best_value;
  }
  return result;
}

}  // namespace icmpr
