#include "icmpr/errors.hpp"
#include "icmpr/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace {

using namespace icmpr;

// --out paths are resolved against ICMPR_OUT_DIR when that is set and the
// path is relative.
std::string resolve_out(const std::string& path) {
  namespace fs = std::filesystem;
  const char* dir = std::getenv("ICMPR_OUT_DIR");
  if (dir == nullptr || *dir == '\0' || fs::path(path).is_absolute()) return path;
  return (fs::path(dir) / path).string();
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string roman_label(std::size_t i) {
  static const char* numerals[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"};
  return i < 10 ? numerals[i] : std::to_string(i + 1);
}

ModelSpec spec_from_flags(Dataset& data, const std::string& type, const std::string& scale,
                          const std::string& shape, const std::string& disp,
                          double time_offset) {
  ModelSpec spec;
  spec.type = model_type_from_string(type);
  spec.scale_idx = resolve_covariate_list(data, scale);
  spec.shape_idx = resolve_covariate_list(data, shape);
  spec.disp_idx = resolve_covariate_list(data, disp);
  spec.time_offset = time_offset;
  spec.validate(data.n_columns());
  return spec;
}

int cmd_fit(const std::string& data_path, const std::string& type, const std::string& scale,
            const std::string& shape, const std::string& disp, double time_offset,
            const std::string& out) {
  Dataset data = load_dataset_csv(data_path, time_offset);
  const ModelSpec spec = spec_from_flags(data, type, scale, shape, disp, time_offset);
  const FitResult result = fit(spec, data);
  std::cout << fit_table_text(result, data.n());
  if (!out.empty())
    atomic_write_file(resolve_out(out), fit_to_json(result, data.n(), data.column_names).dump(2) + "\n");
  return result.converged ? kExitOk : kExitNonConvergence;
}

int cmd_select(const std::string& data_path, const std::string& structures_arg,
               const std::string& types_arg, const std::string& criterion_arg,
               const std::string& stepwise_from, double time_offset, const std::string& out) {
  Dataset data = load_dataset_csv(data_path, time_offset);

  std::vector<CovariateStructure> structures;
  std::vector<int> candidate_union;
  for (const std::string& s : split_on(structures_arg, ';')) {
    CovariateStructure cs;
    cs.name = roman_label(structures.size());
    cs.scale = resolve_covariate_list(data, s);
    cs.shape = cs.scale;
    cs.disp = cs.scale;
    for (int j : cs.scale)
      if (std::find(candidate_union.begin(), candidate_union.end(), j) == candidate_union.end())
        candidate_union.push_back(j);
    structures.push_back(std::move(cs));
  }
  if (structures.empty()) throw ValidationError("--structures is empty");

  std::vector<ModelType> types;
  for (const std::string& t : split_on(types_arg, ','))
    types.push_back(model_type_from_string(t));

  const ModelGridResult grid = fit_model_grid(data, structures, types);
  const std::string base = resolve_out(out);
  atomic_write_file(base + ".csv", grid_to_csv(grid));
  atomic_write_file(base + ".json", grid_to_json(grid).dump(2) + "\n");
  if (grid.best_aic >= 0)
    std::cout << "best AIC: " << grid.entries[grid.best_aic].label << " ("
              << format_g6(grid.entries[grid.best_aic].aic) << ")\n";
  if (grid.best_bic >= 0)
    std::cout << "best BIC: " << grid.entries[grid.best_bic].label << " ("
              << format_g6(grid.entries[grid.best_bic].bic) << ")\n";

  if (!stepwise_from.empty()) {
    const GridEntry* start = nullptr;
    for (const GridEntry& e : grid.entries)
      if (e.label == stepwise_from) start = &e;
    if (start == nullptr)
      throw ValidationError("--stepwise-from label '" + stepwise_from + "' not in the grid");
    const Criterion crit = criterion_from_string(criterion_arg);
    const StepwiseResult sw = stepwise(start->spec, data, candidate_union, crit);
    nlohmann::json j;
    j["schema"] = "icmpr-stepwise/1";
    j["from"] = stepwise_from;
    j["criterion"] = criterion_arg;
    j["final_criterion"] = sw.criterion_value;
    j["final"] = fit_to_json(sw.fit, data.n(), data.column_names);
    nlohmann::json trace = nlohmann::json::array();
    for (const StepwiseMove& m : sw.trace)
      trace.push_back({{"move", m.description},
                       {"criterion", m.criterion},
                       {"loglik", m.loglik},
                       {"k", m.k},
                       {"accepted", m.accepted},
                       {"converged", m.converged}});
    j["trace"] = trace;
    atomic_write_file(base + "_stepwise.json", j.dump(2) + "\n");
    std::cout << "stepwise terminal " << criterion_arg << ": " << format_g6(sw.criterion_value)
              << "\n";
  }
  return kExitOk;
}

int cmd_npmle(const std::string& data_path, double time_offset, double tol, int max_iter,
              const std::string& out) {
  const Dataset data = load_dataset_csv(data_path, time_offset);
  const TurnbullEstimate est = turnbull_fit(data, tol, max_iter);
  for (int i : est.dropped_observations)
    std::cerr << "warning: observation " << (i + 1) << " contains no support interval\n";
  const std::string csv = turnbull_to_csv(est);
  if (out.empty()) {
    std::cout << csv;
  } else {
    atomic_write_file(resolve_out(out), csv);
  }
  return est.converged ? kExitOk : kExitNonConvergence;
}

struct Group {
  std::string name;
  std::map<std::string, double> values;
};

// "label:col=v,col=v;label2:..."
std::vector<Group> parse_groups(const std::string& arg) {
  std::vector<Group> groups;
  for (const std::string& chunk : split_on(arg, ';')) {
    const std::size_t colon = chunk.find(':');
    if (colon == std::string::npos)
      throw ValidationError("group '" + chunk + "' must look like name:col=value,...");
    Group g;
    g.name = chunk.substr(0, colon);
    for (const std::string& kv : split_on(chunk.substr(colon + 1), ',')) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw ValidationError("assignment '" + kv + "' must look like col=value");
      g.values[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

Eigen::VectorXd row_for_group(const Group& g, const std::vector<std::string>& columns) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const std::string& name = columns[j];
    const std::size_t colon = name.find(':');
    if (colon != std::string::npos) {
      // interaction columns are products of their base assignments
      const std::string a = name.substr(0, colon);
      const std::string b = name.substr(colon + 1);
      const double va = g.values.count(a) ? g.values.at(a) : 0.0;
      const double vb = g.values.count(b) ? g.values.at(b) : 0.0;
      row[j] = va * vb;
    } else if (g.values.count(name)) {
      row[j] = g.values.at(name);
    }
  }
  return row;
}

int cmd_predict(const std::string& bundle_path, const std::string& groups_arg,
                const std::string& reference, const std::string& grid_arg,
                const std::string& out) {
  std::vector<std::string> columns;
  int n_obs = 0;
  const FitResult fit = fit_from_json(nlohmann::json::parse(read_file(bundle_path)), columns,
                                      n_obs);

  const std::vector<Group> groups = parse_groups(groups_arg);
  const Group* ref = nullptr;
  for (const Group& g : groups)
    if (g.name == reference) ref = &g;
  if (ref == nullptr)
    throw ValidationError("reference group '" + reference + "' is not among --groups");

  const std::vector<std::string> parts = split_on(grid_arg, ':');
  if (parts.size() != 3) throw ValidationError("--grid must look like start:stop:step");
  const double start = std::stod(parts[0]);
  const double stop = std::stod(parts[1]);
  const double step = std::stod(parts[2]);
  if (!(start > 0) || !(stop > start) || !(step > 0))
    throw ValidationError("--grid requires 0 < start < stop and step > 0");

  const ParamTriple ref_params = evaluate_parameters(fit.spec, fit.theta_hat,
                                                     row_for_group(*ref, columns));
  std::ostringstream curves;
  curves << "group,t,hazard,marginal_hazard,survivor,hazard_ratio,marginal_hazard_ratio\n";
  for (const Group& g : groups) {
    const ParamTriple p = evaluate_parameters(fit.spec, fit.theta_hat, row_for_group(g, columns));
    for (double t = start; t <= stop + 1e-12; t += step) {
      const double h = hazard(p, t);
      const double mh = marginal_hazard(p, t);
      curves << g.name << "," << format_g6(t) << "," << format_g6(h) << "," << format_g6(mh)
             << "," << format_g6(marginal_survivor(p, t)) << ","
             << format_g6(h / hazard(ref_params, t)) << ","
             << format_g6(mh / marginal_hazard(ref_params, t)) << "\n";
    }
  }

  std::ostringstream medians;
  medians << "group,median,lower,upper\n";
  for (const Group& g : groups) {
    const MedianPrediction m = predict_median(fit, row_for_group(g, columns));
    medians << g.name << "," << format_g6(m.median) << ","
            << (m.has_ci ? format_g6(m.lower) : "NA") << ","
            << (m.has_ci ? format_g6(m.upper) : "NA") << "\n";
  }

  const std::string base = resolve_out(out);
  atomic_write_file(base + ".curves.csv", curves.str());
  atomic_write_file(base + ".medians.csv", medians.str());
  std::cout << medians.str();
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, std::optional<int> replicates,
                 std::optional<std::uint64_t> seed, const std::string& out) {
  const nlohmann::json j = nlohmann::json::parse(read_file(scenario_path));
  Scenario scenario = scenario_from_json(j);
  if (replicates) scenario.replicates = *replicates;
  if (seed) scenario.seed = *seed;
  scenario.validate();
  const ModelSpec fit_spec = fit_spec_from_scenario_json(j, scenario);

  const SimulationPlan plan = prepare(scenario);
  const StudySummary summary = run_study(scenario, fit_spec);
  const std::string base = resolve_out(out);
  atomic_write_file(base + ".csv", study_to_csv(summary));
  atomic_write_file(base + ".json", study_to_json(summary, plan).dump(2) + "\n");
  std::cout << "replicates " << summary.replicates << ", converged " << summary.converged
            << ", mean censored fraction " << format_g6(summary.mean_censored_fraction) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weibull multi-parameter regression for interval-censored survival data"};
  app.require_subcommand(1);

  std::string data_path, type = "PH", scale, shape, disp, out;
  double time_offset = 0.0;

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit one model");
  fit_cmd->add_option("data", data_path, "CSV data file")->required();
  fit_cmd->add_option("--type", type, "PH|PHF|PHDM|MPR|MPRF|MPRDM");
  fit_cmd->add_option("--scale", scale, "scale covariates, e.g. sex,dmf,sex:dmf");
  fit_cmd->add_option("--shape", shape, "shape covariates");
  fit_cmd->add_option("--disp", disp, "dispersion covariates");
  fit_cmd->add_option("--time-offset", time_offset, "subtracted from endpoints at load");
  fit_cmd->add_option("--out", out, "fit bundle JSON path");

  std::string structures, types_arg = "PH,PHF,PHDM,MPR,MPRF,MPRDM", criterion = "AIC",
              stepwise_from;
  CLI::App* select_cmd = app.add_subcommand("select", "model grid and stepwise search");
  select_cmd->add_option("data", data_path, "CSV data file")->required();
  select_cmd->add_option("--structures", structures,
                         "semicolon-separated covariate lists, e.g. 'sex;dmf;sex,dmf'")
      ->required();
  select_cmd->add_option("--types", types_arg, "comma-separated model types");
  select_cmd->add_option("--criterion", criterion, "AIC|BIC");
  select_cmd->add_option("--stepwise-from", stepwise_from, "grid label to refine, e.g. MPRF(IV)");
  select_cmd->add_option("--time-offset", time_offset, "subtracted from endpoints at load");
  select_cmd->add_option("--out", out, "output path prefix")->required();

  double npmle_tol = 1e-8;
  int npmle_max_iter = 10000;
  CLI::App* npmle_cmd = app.add_subcommand("npmle", "Turnbull nonparametric survivor estimate");
  npmle_cmd->add_option("data", data_path, "CSV data file")->required();
  npmle_cmd->add_option("--time-offset", time_offset, "subtracted from endpoints at load");
  npmle_cmd->add_option("--tol", npmle_tol, "max mass change at convergence");
  npmle_cmd->add_option("--max-iter", npmle_max_iter, "EM sweep cap");
  npmle_cmd->add_option("--out", out, "survivor CSV path (stdout when omitted)");

  std::string bundle_path, groups, reference, grid = "0.25:8:0.25";
  CLI::App* predict_cmd = app.add_subcommand("predict", "curves and medians from a fit bundle");
  predict_cmd->add_option("bundle", bundle_path, "fit bundle JSON")->required();
  predict_cmd->add_option("--groups", groups, "name:col=v,col=v;name2:...")->required();
  predict_cmd->add_option("--reference", reference, "reference group for hazard ratios")
      ->required();
  predict_cmd->add_option("--grid", grid, "time grid start:stop:step");
  predict_cmd->add_option("--out", out, "output path prefix")->required();

  std::string scenario_path;
  std::optional<int> replicates_opt;
  std::optional<std::uint64_t> seed_opt;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "replicate study from a scenario file");
  sim_cmd->add_option("scenario", scenario_path, "scenario JSON")->required();
  sim_cmd->add_option("--replicates", replicates_opt, "override scenario replicates");
  sim_cmd->add_option("--seed", seed_opt, "override scenario seed");
  sim_cmd->add_option("--out", out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? icmpr::kExitOk : icmpr::kExitValidation;
  }

  try {
    if (fit_cmd->parsed())
      return cmd_fit(data_path, type, scale, shape, disp, time_offset, out);
    if (select_cmd->parsed())
      return cmd_select(data_path, structures, types_arg, criterion, stepwise_from, time_offset,
                        out);
    if (npmle_cmd->parsed())
      return cmd_npmle(data_path, time_offset, npmle_tol, npmle_max_iter, out);
    if (predict_cmd->parsed()) return cmd_predict(bundle_path, groups, reference, grid, out);
    if (sim_cmd->parsed())
      return cmd_simulate(scenario_path, replicates_opt, seed_opt, out);
  } catch (const icmpr::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return icmpr::kExitParse;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return icmpr::kExitParse;
  } catch (const icmpr::NonIdentifiableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return icmpr::kExitNonIdentifiable;
  } catch (const icmpr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return icmpr::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return icmpr::kExitOk;
}
