#include "icmpr/io.hpp"

#include "icmpr/errors.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

using namespace icmpr;

TEST_CASE("CSV ingestion with censoring tokens and offset") {
  const std::string csv =
      "left,right,sex,dmf\n"
      "6.0,7.0,1,0\n"
      "7.5,,0,1\n"
      "8.0,Inf,1,1\n"
      "6.2,NA,0,0\n"
      "5.5,6.5,0,1\n";
  const Dataset data = dataset_from_csv_text(csv, 5.0);
  CHECK(data.n() == 5);
  CHECK(data.n_columns() == 2);
  CHECK(data.column_names[0] == "sex");
  CHECK(data.left[0] == doctest::Approx(1.0));
  CHECK(data.right[0] == doctest::Approx(2.0));
  CHECK(std::isinf(data.right[1]));
  CHECK(std::isinf(data.right[2]));
  CHECK(std::isinf(data.right[3]));
  CHECK(data.n_right_censored() == 3);
  CHECK(data.covariates(2, 0) == 1.0);
  CHECK(data.covariates(2, 1) == 1.0);
}

TEST_CASE("CSV parse errors point at the offending cell") {
  const std::string bad_number =
      "left,right,x\n"
      "1,2,0.5\n"
      "1,2,oops\n";
  try {
    dataset_from_csv_text(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == "x");
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  CHECK_THROWS_AS(dataset_from_csv_text("left,x\n1,2\n"), ParseError);      // no right column
  CHECK_THROWS_AS(dataset_from_csv_text("left,right\n3,2\n"), ParseError);  // empty interval
  CHECK_THROWS_AS(dataset_from_csv_text("left,right\n1,3\n", 2.0), ParseError);  // a < 0 after offset
}

TEST_CASE("covariate lists resolve names and expand interactions") {
  Dataset data = dataset_from_csv_text(
      "left,right,sex,dmf\n"
      "1,2,1,0\n"
      "2,3,1,1\n"
      "1,4,0,1\n");
  const std::vector<int> idx = resolve_covariate_list(data, "sex,dmf,sex:dmf");
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 1);
  CHECK(idx[2] == 2);
  CHECK(data.column_names[2] == "sex:dmf");
  CHECK(data.covariates(0, 2) == 0.0);
  CHECK(data.covariates(1, 2) == 1.0);

  // resolving again reuses the appended column
  const std::vector<int> again = resolve_covariate_list(data, "sex:dmf");
  CHECK(again[0] == 2);
  CHECK(data.n_columns() == 3);

  CHECK_THROWS_AS(resolve_covariate_list(data, "age"), ValidationError);
  CHECK_THROWS_AS(resolve_covariate_list(data, "sex:age"), ValidationError);
}

TEST_CASE("fit bundles round-trip through JSON losslessly") {
  Rng rng(81);
  ModelSpec spec = testing::spec_for(ModelType::MPRF, 2, 1, 0);
  Theta truth = testing::random_theta(spec, rng);
  const Dataset data = testing::random_dataset(spec, truth, 150, rng, 0.15);
  const FitResult fr = fit(spec, data);
  REQUIRE(fr.converged);

  const nlohmann::json j = fit_to_json(fr, data.n(), data.column_names);
  const nlohmann::json reparsed = nlohmann::json::parse(j.dump());
  std::vector<std::string> columns;
  int n_obs = 0;
  const FitResult back = fit_from_json(reparsed, columns, n_obs);

  CHECK(n_obs == data.n());
  CHECK(columns == data.column_names);
  CHECK(back.spec.type == spec.type);
  CHECK(back.spec.scale_idx == spec.scale_idx);
  CHECK(back.spec.shape_idx == spec.shape_idx);
  CHECK(back.theta_hat.pack() == fr.theta_hat.pack());  // bit-exact
  CHECK(back.loglik == fr.loglik);
  CHECK(back.covariance == fr.covariance);
  CHECK(back.se == fr.se);
  CHECK(back.converged == fr.converged);
}

TEST_CASE("atomic file writes land complete") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "icmpr_io_test";
  fs::create_directories(dir);
  const std::string path = (dir / "out.txt").string();
  atomic_write_file(path, "payload\n");
  CHECK(read_file(path) == "payload\n");
  CHECK_FALSE(fs::exists(path + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("scenario JSON parses types, truth and generators") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "n": 500, "d": 0.1, "p": 0.3, "replicates": 10, "seed": 99,
    "truth": {
      "type": "MPRF",
      "scale": {"intercept": 2.0, "x1": 0.5, "x2": 0.3},
      "shape": {"intercept": 2.0, "x1": 0.25, "x2": -0.1},
      "dispersion": {"intercept": -0.6931471805599453}
    },
    "covariates": [
      {"name": "x1", "kind": "bernoulli", "p": 0.5},
      {"name": "x2", "kind": "normal", "mean": 0.0, "sd": 0.5}
    ],
    "fit": {"type": "MPR", "scale": ["x1", "x2"], "shape": ["x1"]}
  })");
  const Scenario sc = scenario_from_json(j);
  CHECK(sc.n == 500);
  CHECK(sc.p == 0.3);
  CHECK(sc.seed == 99);
  CHECK(sc.spec.type == ModelType::MPRF);
  CHECK(sc.spec.scale_idx == std::vector<int>{0, 1});
  CHECK(sc.truth.beta[0] == 2.0);
  CHECK(sc.truth.beta[2] == 0.3);
  CHECK(sc.truth.alpha[1] == 0.25);
  CHECK(sc.truth.psi[0] == doctest::Approx(std::log(0.5)));
  CHECK(sc.covariates[1].sd == 0.5);

  const ModelSpec fit_spec = fit_spec_from_scenario_json(j, sc);
  CHECK(fit_spec.type == ModelType::MPR);
  CHECK(fit_spec.scale_idx == std::vector<int>{0, 1});
  CHECK(fit_spec.shape_idx == std::vector<int>{0});

  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"n": 10})")), ParseError);
}

TEST_CASE("study and grid CSV emitters produce well-formed tables") {
  StudySummary summary;
  summary.replicates = 4;
  summary.converged = 4;
  summary.convergence_rate = 1.0;
  CoefficientSummary cs;
  cs.name = "scale.x1";
  cs.truth = 0.5;
  cs.median_estimate = 0.49;
  cs.empirical_se = 0.07;
  cs.percent_bias = -1.2;
  cs.mean_model_se = std::numeric_limits<double>::quiet_NaN();
  summary.coefficients.push_back(cs);
  const std::string csv = study_to_csv(summary);
  CHECK(csv.find("name,truth,median_estimate,empirical_se,percent_bias,mean_model_se\n") == 0);
  CHECK(csv.find("scale.x1,0.5,0.49,0.07,-1.2,NA\n") != std::string::npos);
}

TEST_CASE("six significant digit formatting") {
  CHECK(format_g6(11050.34) == "11050.3");
  CHECK(format_g6(0.5) == "0.5");
  CHECK(format_g6(-5520.1999) == "-5520.2");
  CHECK(format_g6(1234567.0) == "1.23457e+06");
}
