#include "icmpr/io.hpp"

#include "icmpr/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace icmpr {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

bool is_censoring_token(const std::string& raw) {
  const std::string v = lower(raw);
  return v.empty() || v == "na" || v == "inf" || v == "+inf" || v == "infinity";
}

double parse_double(const std::string& raw, long row, const std::string& column) {
  const std::string v = trim(raw);
  if (v.empty()) throw ParseError("empty numeric field", row, column);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) throw ParseError("cannot parse '" + v + "'", row, column);
  return x;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset dataset_from_csv_text(const std::string& text, double time_offset) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty data file");
  const std::vector<std::string> header = split(line, ',');

  int left_col = -1, right_col = -1;
  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "left") {
      left_col = static_cast<int>(j);
    } else if (header[j] == "right") {
      right_col = static_cast<int>(j);
    } else {
      cov_cols.push_back(static_cast<int>(j));
      cov_names.push_back(header[j]);
    }
  }
  if (left_col < 0 || right_col < 0)
    throw ParseError("data file must have 'left' and 'right' columns");

  std::vector<double> lefts, rights;
  std::vector<std::vector<double>> covs;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row, "");
    const double a = parse_double(fields[left_col], row, "left") - time_offset;
    double b;
    if (is_censoring_token(fields[right_col])) {
      b = std::numeric_limits<double>::infinity();
    } else {
      b = parse_double(fields[right_col], row, "right") - time_offset;
    }
    if (!(a >= 0.0)) throw ParseError("left endpoint negative after offset", row, "left");
    if (!(b > a)) throw ParseError("interval empty after offset", row, "right");
    lefts.push_back(a);
    rights.push_back(b);
    std::vector<double> cv;
    for (std::size_t j = 0; j < cov_cols.size(); ++j)
      cv.push_back(parse_double(fields[cov_cols[j]], row, cov_names[j]));
    covs.push_back(std::move(cv));
  }
  if (lefts.empty()) throw ParseError("data file has no observations");

  Dataset data;
  const int n = static_cast<int>(lefts.size());
  data.left = Eigen::Map<Eigen::VectorXd>(lefts.data(), n);
  data.right = Eigen::Map<Eigen::VectorXd>(rights.data(), n);
  data.covariates.resize(n, static_cast<int>(cov_names.size()));
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cov_names.size(); ++j) data.covariates(i, j) = covs[i][j];
  data.column_names = cov_names;
  data.validate();
  return data;
}

Dataset load_dataset_csv(const std::string& path, double time_offset) {
  return dataset_from_csv_text(read_file(path), time_offset);
}

namespace {

int interaction_column(Dataset& data, const std::string& name) {
  const std::size_t colon = name.find(':');
  const std::string a = trim(name.substr(0, colon));
  const std::string b = trim(name.substr(colon + 1));
  const int ia = data.column_index(a);
  const int ib = data.column_index(b);
  if (ia < 0 || ib < 0)
    throw ValidationError("unknown covariate in interaction '" + name + "'");
  const std::string canonical = a + ":" + b;
  int existing = data.column_index(canonical);
  if (existing >= 0) return existing;
  data.covariates.conservativeResize(Eigen::NoChange, data.covariates.cols() + 1);
  data.covariates.col(data.covariates.cols() - 1) =
      data.covariates.col(ia).cwiseProduct(data.covariates.col(ib));
  data.column_names.push_back(canonical);
  return data.n_columns() - 1;
}

}  // namespace

std::vector<int> resolve_covariate_list(Dataset& data, const std::string& list) {
  std::vector<int> idx;
  if (trim(list).empty()) return idx;
  for (const std::string& raw : split(list, ',')) {
    const std::string name = trim(raw);
    if (name.empty()) throw ValidationError("empty covariate name in list '" + list + "'");
    if (name.find(':') != std::string::npos) {
      idx.push_back(interaction_column(data, name));
    } else {
      const int j = data.column_index(name);
      if (j < 0) throw ValidationError("unknown covariate '" + name + "'");
      idx.push_back(j);
    }
  }
  return idx;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, target);
}

std::string format_g6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[i] = arr[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : arr[i].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i)));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd m(n, n == 0 ? 0 : static_cast<int>(rows[0].size()));
  for (int i = 0; i < n; ++i) m.row(i) = vector_from_json(rows[i]);
  return m;
}

std::vector<std::string> names_of(const std::vector<int>& idx,
                                  const std::vector<std::string>& columns) {
  std::vector<std::string> out;
  for (int j : idx) out.push_back(columns[j]);
  return out;
}

std::vector<int> indices_of(const nlohmann::json& names,
                            const std::vector<std::string>& columns) {
  std::vector<int> idx;
  for (const auto& n : names) {
    const std::string name = n.get<std::string>();
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ParseError("bundle references unknown column '" + name + "'");
    idx.push_back(static_cast<int>(it - columns.begin()));
  }
  return idx;
}

}  // namespace

nlohmann::json fit_to_json(const FitResult& fit, int n_obs,
                           const std::vector<std::string>& columns) {
  const InformationCriteria ic = information_criteria(fit.loglik, fit.spec.n_params(), n_obs);
  nlohmann::json j;
  j["schema"] = "icmpr-fit/1";
  j["model"] = {{"type", to_string(fit.spec.type)},
                {"scale", names_of(fit.spec.scale_idx, columns)},
                {"shape", names_of(fit.spec.shape_idx, columns)},
                {"dispersion", names_of(fit.spec.disp_idx, columns)},
                {"time_offset", fit.spec.time_offset}};
  j["columns"] = columns;
  j["n"] = n_obs;
  j["coefficients"] = {{"beta", vector_to_json(fit.theta_hat.beta)},
                       {"alpha", vector_to_json(fit.theta_hat.alpha)},
                       {"psi", vector_to_json(fit.theta_hat.psi)}};
  j["loglik"] = fit.loglik;
  j["k"] = fit.spec.n_params();
  j["aic"] = ic.aic;
  j["bic"] = ic.bic;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["grad_norm"] = fit.grad_norm;
  j["covariance_valid"] = fit.covariance_valid;
  j["information_rank"] = fit.information_rank;
  j["covariance"] = matrix_to_json(fit.covariance);
  j["se"] = vector_to_json(fit.se);
  if (has_frailty(fit.spec.type))
    j["frailty_absent"] = fit.theta_hat.psi[0] < -20.0;
  if (fit.covariance_valid) {
    nlohmann::json table = nlohmann::json::array();
    for (const WaldTest& t : wald_tests(fit)) {
      table.push_back({{"name", t.name},
                       {"estimate", t.estimate},
                       {"se", t.se},
                       {"z", t.z},
                       {"p", t.p},
                       {"significant", t.significant}});
    }
    j["table"] = table;
  }
  return j;
}

FitResult fit_from_json(const nlohmann::json& bundle, std::vector<std::string>& columns,
                        int& n_obs) {
  if (!bundle.contains("schema") || bundle["schema"] != "icmpr-fit/1")
    throw ParseError("not an icmpr fit bundle");
  columns = bundle["columns"].get<std::vector<std::string>>();
  n_obs = bundle["n"].get<int>();

  FitResult fit;
  fit.spec.type = model_type_from_string(bundle["model"]["type"].get<std::string>());
  fit.spec.scale_idx = indices_of(bundle["model"]["scale"], columns);
  fit.spec.shape_idx = indices_of(bundle["model"]["shape"], columns);
  fit.spec.disp_idx = indices_of(bundle["model"]["dispersion"], columns);
  fit.spec.time_offset = bundle["model"]["time_offset"].get<double>();
  fit.theta_hat.beta = vector_from_json(bundle["coefficients"]["beta"]);
  fit.theta_hat.alpha = vector_from_json(bundle["coefficients"]["alpha"]);
  fit.theta_hat.psi = vector_from_json(bundle["coefficients"]["psi"]);
  fit.loglik = bundle["loglik"].get<double>();
  fit.converged = bundle["converged"].get<bool>();
  fit.iterations = bundle["iterations"].get<int>();
  fit.grad_norm = bundle["grad_norm"].get<double>();
  fit.covariance_valid = bundle["covariance_valid"].get<bool>();
  fit.information_rank = bundle["information_rank"].get<int>();
  fit.covariance = matrix_from_json(bundle["covariance"]);
  fit.se = vector_from_json(bundle["se"]);
  fit.coef_names = coefficient_names(fit.spec, columns);
  return fit;
}

std::string fit_table_text(const FitResult& fit, int n_obs) {
  const InformationCriteria ic = information_criteria(fit.loglik, fit.spec.n_params(), n_obs);
  std::ostringstream out;
  out << "model " << to_string(fit.spec.type) << "  (k = " << fit.spec.n_params()
      << ", n = " << n_obs << ")\n";
  out << "loglik " << format_g6(fit.loglik) << "  AIC " << format_g6(ic.aic) << "  BIC "
      << format_g6(ic.bic) << "\n";
  out << (fit.converged ? "converged" : "NOT converged") << " in " << fit.iterations
      << " iterations, max |score| = " << format_g6(fit.grad_norm) << "\n";
  if (has_frailty(fit.spec.type) && fit.theta_hat.psi[0] < -20.0)
    out << "frailty absent: estimated variance below exp(-20)\n";
  out << "\n";
  const Eigen::VectorXd est = fit.theta_hat.pack();
  out << "coefficient                    estimate        se         z         p\n";
  for (int j = 0; j < est.size(); ++j) {
    char line[160];
    if (fit.covariance_valid) {
      const double z = est[j] / fit.se[j];
      const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
      std::snprintf(line, sizeof(line), "%-28s %9.4f %9.4f %9.3f %9.4f%s\n",
                    fit.coef_names[j].c_str(), est[j], fit.se[j], z, p,
                    p < 0.05 ? " *" : "");
    } else {
      std::snprintf(line, sizeof(line), "%-28s %9.4f        --        --        --\n",
                    fit.coef_names[j].c_str(), est[j]);
    }
    out << line;
  }
  return out.str();
}

std::string grid_to_csv(const ModelGridResult& grid) {
  std::ostringstream out;
  out << "label,type,converged,loglik,k,aic,bic,daic,dbic\n";
  for (const GridEntry& e : grid.entries) {
    out << e.label << "," << to_string(e.spec.type) << "," << (e.converged ? 1 : 0) << ","
        << format_g6(e.loglik) << "," << e.k << "," << format_g6(e.aic) << ","
        << format_g6(e.bic) << "," << format_g6(e.daic) << "," << format_g6(e.dbic) << "\n";
  }
  for (const TypeSummary& t : grid.per_type) {
    out << to_string(t.type) << "(mean)," << to_string(t.type) << ",,," << ","
        << format_g6(t.mean_aic) << "," << format_g6(t.mean_bic) << ","
        << format_g6(t.mean_daic) << "," << format_g6(t.mean_dbic) << "\n";
  }
  return out.str();
}

nlohmann::json grid_to_json(const ModelGridResult& grid) {
  nlohmann::json j;
  j["schema"] = "icmpr-grid/1";
  j["n"] = grid.n;
  nlohmann::json entries = nlohmann::json::array();
  for (const GridEntry& e : grid.entries) {
    entries.push_back({{"label", e.label},
                       {"type", to_string(e.spec.type)},
                       {"converged", e.converged},
                       {"loglik", e.loglik},
                       {"k", e.k},
                       {"aic", e.aic},
                       {"bic", e.bic},
                       {"daic", e.daic},
                       {"dbic", e.dbic}});
  }
  j["entries"] = entries;
  nlohmann::json means = nlohmann::json::array();
  for (const TypeSummary& t : grid.per_type) {
    means.push_back({{"type", to_string(t.type)},
                     {"mean_aic", t.mean_aic},
                     {"mean_bic", t.mean_bic},
                     {"mean_daic", t.mean_daic},
                     {"mean_dbic", t.mean_dbic}});
  }
  j["type_means"] = means;
  if (grid.best_aic >= 0) j["best_aic"] = grid.entries[grid.best_aic].label;
  if (grid.best_bic >= 0) j["best_bic"] = grid.entries[grid.best_bic].label;
  return j;
}

std::string turnbull_to_csv(const TurnbullEstimate& est) {
  std::set<double> points{0.0};
  for (const SupportInterval& s : est.support) {
    points.insert(s.left);
    points.insert(s.right);
  }
  std::ostringstream out;
  out << "t,s_upper,s_lower\n";
  for (double t : points) {
    const auto [up, lo] = est.survivor_band(t);
    out << format_g6(t) << "," << format_g6(up) << "," << format_g6(lo) << "\n";
  }
  return out.str();
}

std::string study_to_csv(const StudySummary& summary) {
  std::ostringstream out;
  out << "name,truth,median_estimate,empirical_se,percent_bias,mean_model_se\n";
  auto cell = [](double x) { return std::isfinite(x) ? format_g6(x) : std::string("NA"); };
  for (const CoefficientSummary& c : summary.coefficients) {
    out << c.name << "," << cell(c.truth) << "," << cell(c.median_estimate) << ","
        << cell(c.empirical_se) << "," << cell(c.percent_bias) << "," << cell(c.mean_model_se)
        << "\n";
  }
  return out.str();
}

nlohmann::json study_to_json(const StudySummary& summary, const SimulationPlan& plan) {
  nlohmann::json j;
  j["schema"] = "icmpr-study/1";
  j["replicates"] = summary.replicates;
  j["converged"] = summary.converged;
  j["convergence_rate"] = summary.convergence_rate;
  j["mean_censored_fraction"] = summary.mean_censored_fraction;
  j["expected_time"] = plan.expected_time;
  j["inspection_width_c"] = plan.c;
  j["censoring_rate_eta"] = plan.eta;
  j["seed"] = plan.scenario.seed;
  nlohmann::json rows = nlohmann::json::array();
  for (const CoefficientSummary& c : summary.coefficients) {
    rows.push_back({{"name", c.name},
                    {"truth", c.truth},
                    {"median_estimate", c.median_estimate},
                    {"empirical_se", c.empirical_se},
                    {"percent_bias", c.percent_bias},
                    {"mean_model_se", c.mean_model_se}});
  }
  j["coefficients"] = rows;
  return j;
}

namespace {

CovariateGenerator generator_from_json(const nlohmann::json& j) {
  CovariateGenerator g;
  g.name = j.at("name").get<std::string>();
  const std::string kind = lower(j.at("kind").get<std::string>());
  if (kind == "bernoulli") {
    g.kind = CovariateGenerator::Kind::Bernoulli;
    g.p = j.value("p", 0.5);
  } else if (kind == "normal") {
    g.kind = CovariateGenerator::Kind::Normal;
    g.mean = j.value("mean", 0.0);
    g.sd = j.value("sd", 1.0);
  } else {
    throw ParseError("unknown covariate kind '" + kind + "'");
  }
  return g;
}

// Coefficient map {intercept: ..., name: ...} -> (index set, coefficients)
// ordered by the scenario covariate list.
void block_from_json(const nlohmann::json& j, const std::vector<CovariateGenerator>& gens,
                     std::vector<int>& idx, Eigen::VectorXd& coef) {
  std::vector<double> values;
  values.push_back(j.value("intercept", 0.0));
  idx.clear();
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (j.contains(gens[g].name)) {
      idx.push_back(static_cast<int>(g));
      values.push_back(j[gens[g].name].get<double>());
    }
  }
  coef = Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    sc.n = j.at("n").get<int>();
    sc.d = j.at("d").get<double>();
    sc.p = j.value("p", 0.0);
    sc.replicates = j.value("replicates", 1);
    sc.seed = j.value("seed", 1ull);
    if (j.contains("covariates")) {
      sc.covariates.clear();
      for (const auto& g : j["covariates"]) sc.covariates.push_back(generator_from_json(g));
    }
    const nlohmann::json& truth = j.at("truth");
    sc.spec.type = model_type_from_string(truth.at("type").get<std::string>());
    block_from_json(truth.value("scale", nlohmann::json::object()), sc.covariates,
                    sc.spec.scale_idx, sc.truth.beta);
    block_from_json(truth.value("shape", nlohmann::json::object()), sc.covariates,
                    sc.spec.shape_idx, sc.truth.alpha);
    if (has_frailty(sc.spec.type)) {
      block_from_json(truth.value("dispersion", nlohmann::json::object()), sc.covariates,
                      sc.spec.disp_idx, sc.truth.psi);
    } else {
      sc.spec.disp_idx.clear();
      sc.truth.psi.resize(0);
    }
    if (!has_shape_regression(sc.spec.type) && !sc.spec.shape_idx.empty())
      throw ParseError("truth declares shape covariates for a PH-family type");
    if (!has_dispersion_regression(sc.spec.type) && !sc.spec.disp_idx.empty())
      throw ParseError("truth declares dispersion covariates for a non-DM type");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

ModelSpec fit_spec_from_scenario_json(const nlohmann::json& j, const Scenario& scenario) {
  if (!j.contains("fit")) return scenario.spec;
  const nlohmann::json& f = j["fit"];
  ModelSpec spec;
  auto resolve = [&](const nlohmann::json& names) {
    std::vector<int> idx;
    for (const auto& n : names) {
      const std::string name = n.get<std::string>();
      int found = -1;
      for (std::size_t g = 0; g < scenario.covariates.size(); ++g)
        if (scenario.covariates[g].name == name) found = static_cast<int>(g);
      if (found < 0) throw ParseError("fit spec references unknown covariate '" + name + "'");
      idx.push_back(found);
    }
    return idx;
  };
  try {
    spec.type = model_type_from_string(f.at("type").get<std::string>());
    spec.scale_idx = resolve(f.value("scale", nlohmann::json::array()));
    spec.shape_idx = resolve(f.value("shape", nlohmann::json::array()));
    spec.disp_idx = resolve(f.value("dispersion", nlohmann::json::array()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid fit spec: ") + e.what());
  }
  spec.validate(static_cast<int>(scenario.covariates.size()));
  return spec;
}

}  // namespace icmpr
