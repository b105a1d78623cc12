#include "icmpr/estimator.hpp"
#include "icmpr/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

// End-to-end checks that drive the installed binary. The path comes from
// the ICMPR_CLI environment variable set by ctest.

namespace fs = std::filesystem;
using namespace icmpr;

namespace {

std::string cli_path() {
  const char* p = std::getenv("ICMPR_CLI");
  REQUIRE_MESSAGE(p != nullptr, "ICMPR_CLI must point at the icmpr binary");
  return p;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("icmpr_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const int status = std::system((cli_path() + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

const char* kToyCsv =
    "left,right,x1,x2\n"
    "0.5,1.0,1,0.2\n"
    "1.0,1.8,0,-0.3\n"
    "0.2,0.9,1,0.7\n"
    "1.4,,0,0.1\n"
    "0.8,1.6,1,-0.5\n"
    "0.3,1.1,0,0.4\n"
    "0.9,2.2,1,0.9\n"
    "1.1,2.0,0,-0.8\n"
    "0.4,1.2,1,0.3\n"
    "0.7,1.5,0,-0.1\n"
    "0.6,1.4,1,0.6\n"
    "1.2,2.4,0,0.5\n"
    "0.1,0.8,1,-0.2\n"
    "0.9,1.9,0,-0.6\n"
    "1.3,2.6,1,0.8\n"
    "0.5,1.3,0,0.0\n"
    "0.8,2.1,1,-0.4\n"
    "1.6,,0,0.2\n"
    "0.2,1.0,1,0.1\n"
    "1.0,2.3,0,-0.7\n";

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_CASE("cli fit matches the in-process fit exactly") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);
  const fs::path bundle = dir.path / "fit.json";

  const int code = run("fit " + csv.string() + " --type MPR --scale x1 --shape x1 --out " +
                       bundle.string());
  CHECK(code == kExitOk);

  Dataset data = load_dataset_csv(csv.string());
  ModelSpec spec;
  spec.type = ModelType::MPR;
  spec.scale_idx = resolve_covariate_list(data, "x1");
  spec.shape_idx = resolve_covariate_list(data, "x1");
  const FitResult expected = fit(spec, data);

  std::vector<std::string> columns;
  int n_obs = 0;
  const FitResult actual =
      fit_from_json(nlohmann::json::parse(read_file(bundle.string())), columns, n_obs);
  CHECK(actual.theta_hat.pack() == expected.theta_hat.pack());
  CHECK(actual.loglik == expected.loglik);
}

TEST_CASE("cli fit output is byte-identical across reruns") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);
  const fs::path b1 = dir.path / "a.json";
  const fs::path b2 = dir.path / "b.json";
  REQUIRE(run("fit " + csv.string() + " --type PHF --scale x1,x2 --out " + b1.string()) ==
          kExitOk);
  REQUIRE(run("fit " + csv.string() + " --type PHF --scale x1,x2 --out " + b2.string()) ==
          kExitOk);
  CHECK(read_file(b1.string()) == read_file(b2.string()));
}

TEST_CASE("cli exit codes distinguish failure classes") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);

  // model-type violation: PH has no shape regression
  CHECK(run("fit " + csv.string() + " --type PH --shape x1") == kExitValidation);
  // unknown covariate
  CHECK(run("fit " + csv.string() + " --type PH --scale nosuch") == kExitValidation);

  const fs::path bad = dir.path / "bad.csv";
  write(bad, "left,right,x\n1,2,0.5\n2,1,zzz\n");
  CHECK(run("fit " + bad.string() + " --type PH --scale x") == kExitParse);

  const fs::path censored = dir.path / "cens.csv";
  write(censored, "left,right\n1,\n2,\n3,\n");
  CHECK(run("fit " + censored.string() + " --type PH") == kExitNonIdentifiable);

  CHECK(run("fit " + dir.path.string() + "/missing.csv --type PH") == kExitParse);
}

TEST_CASE("cli npmle reproduces the two-interval toy and the overlap toy") {
  TempDir dir;
  const fs::path toy = dir.path / "toy.csv";
  write(toy, "left,right\n0,1\n1,2\n");
  const fs::path out = dir.path / "np.csv";
  REQUIRE(run("npmle " + toy.string() + " --out " + out.string()) == kExitOk);
  const auto rows = read_csv(out);
  REQUIRE(rows.size() == 4);  // header + t = 0, 1, 2
  CHECK(rows[0][0] == "t");
  CHECK(rows[1][1] == "1");    // S(0) = 1
  CHECK(rows[2][1] == "0.5");  // S(1) = 0.5
  CHECK(rows[3][1] == "0");    // S(2) = 0

  const fs::path overlap = dir.path / "overlap.csv";
  write(overlap, "left,right\n0,2\n1,3\n");
  const fs::path out2 = dir.path / "np2.csv";
  REQUIRE(run("npmle " + overlap.string() + " --out " + out2.string()) == kExitOk);
  const auto rows2 = read_csv(out2);
  REQUIRE(rows2.size() == 4);
  CHECK(rows2[2][0] == "1");  // single support interval (1, 2]
  CHECK(rows2[2][1] == "1");
  CHECK(rows2[3][0] == "2");
  CHECK(rows2[3][1] == "0");

  const fs::path allcens = dir.path / "cens.csv";
  write(allcens, "left,right\n1,\n2,\n");
  CHECK(run("npmle " + allcens.string()) == kExitNonIdentifiable);
}

TEST_CASE("cli predict emits constant hazard ratios for a PH fit") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);
  const fs::path bundle = dir.path / "fit.json";
  REQUIRE(run("fit " + csv.string() + " --type PH --scale x1 --out " + bundle.string()) ==
          kExitOk);

  const fs::path out = dir.path / "pred";
  REQUIRE(run("predict " + bundle.string() +
              " --groups 'ref:x1=0;treat:x1=1' --reference ref --grid 0.5:2.5:0.5 --out " +
              out.string()) == kExitOk);

  const auto curves = read_csv(dir.path / "pred.curves.csv");
  REQUIRE(curves.size() > 1);
  CHECK(curves[0][0] == "group");
  std::string treat_ratio;
  double last_survivor = 1.0;
  std::string group;
  for (std::size_t i = 1; i < curves.size(); ++i) {
    const double s = std::stod(curves[i][4]);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    if (curves[i][0] != group) {
      group = curves[i][0];
      last_survivor = 1.0;
    }
    CHECK(s <= last_survivor + 1e-12);  // survivor columns never increase
    last_survivor = s;
    if (curves[i][0] != "treat") continue;
    if (treat_ratio.empty()) treat_ratio = curves[i][5];
    CHECK(curves[i][5] == treat_ratio);  // constant in t
    CHECK(curves[i][5] == curves[i][6]); // marginal ratio equals conditional without frailty
  }
  const auto medians = read_csv(dir.path / "pred.medians.csv");
  REQUIRE(medians.size() == 3);
  CHECK(medians[0][0] == "group");

  CHECK(run("predict " + bundle.string() +
            " --groups a:x1=0 --reference missing --grid 1:2:1 --out " + out.string()) ==
        kExitValidation);
}

TEST_CASE("cli simulate is deterministic and honours the scenario schema") {
  TempDir dir;
  const fs::path scenario = dir.path / "scenario.json";
  write(scenario, R"({
    "n": 80, "d": 0.1, "p": 0.0, "replicates": 3, "seed": 7,
    "truth": {
      "type": "MPR",
      "scale": {"intercept": 2.0, "x1": 0.5, "x2": 0.3},
      "shape": {"intercept": 2.0, "x1": 0.25, "x2": -0.1}
    }
  })");
  const fs::path out1 = dir.path / "s1";
  const fs::path out2 = dir.path / "s2";
  REQUIRE(run("simulate " + scenario.string() + " --out " + out1.string()) == kExitOk);
  REQUIRE(run("simulate " + scenario.string() + " --out " + out2.string()) == kExitOk);
  CHECK(read_file(out1.string() + ".csv") == read_file(out2.string() + ".csv"));
  CHECK(read_file(out1.string() + ".json") == read_file(out2.string() + ".json"));

  const auto rows = read_csv(dir.path / "s1.csv");
  REQUIRE(rows.size() == 7);  // header + 6 coefficients
  CHECK(rows[1][1] == "2");   // truth column

  write(scenario, R"({"n": 80})");
  CHECK(run("simulate " + scenario.string() + " --out " + out1.string()) == kExitParse);
}

TEST_CASE("relative --out paths honour ICMPR_OUT_DIR") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);
  const int status = std::system(("ICMPR_OUT_DIR=" + dir.path.string() + " " + cli_path() +
                                  " fit " + csv.string() +
                                  " --type PH --scale x1 --out sub/fit.json >/dev/null 2>&1")
                                     .c_str());
  CHECK(WEXITSTATUS(status) == kExitOk);
  CHECK(fs::exists(dir.path / "sub" / "fit.json"));
}

TEST_CASE("cli select runs a small grid with per-type means") {
  TempDir dir;
  const fs::path csv = dir.path / "toy.csv";
  write(csv, kToyCsv);
  const fs::path out = dir.path / "grid";
  REQUIRE(run("select " + csv.string() +
              " --structures 'x1;x1,x2' --types PH,MPR --out " + out.string()) == kExitOk);
  const auto rows = read_csv(dir.path / "grid.csv");
  // header + 4 fits + 2 mean rows
  REQUIRE(rows.size() == 7);
  CHECK(rows[1][0] == "PH(I)");
  CHECK(rows[2][0] == "PH(II)");
  CHECK(rows[3][0] == "MPR(I)");
  CHECK(rows[5][0] == "PH(mean)");
  const nlohmann::json grid = nlohmann::json::parse(read_file(out.string() + ".json"));
  CHECK(grid["entries"].size() == 4);
  CHECK(grid.contains("best_aic"));
}
