// End-to-end checks of the command-line front end: configs and CSVs go in,
// schema-valid reports come out, exit codes follow the error category.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "pathmed/report.hpp"
#include "pathmed/simulation.hpp"
#include "test_support.hpp"

using namespace pathmed;
using nlohmann::json;

namespace {

std::string g_cli;
std::string g_source_dir;

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

std::string report_schema() {
  return pathmed::testing::slurp(g_source_dir + "/schemas/report.schema.json");
}

}  // namespace

TEST_CASE("estimate: end to end on a generated synthetic sample") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  ObservedData d = generate(coeffs, 2000, 424);
  pathmed::testing::write_dataset_csv(d, "cli_data.csv");
  write_file("cli_config.json", R"({
    "input": "cli_data.csv",
    "roles": {
      "treatment": "a", "outcome": "y",
      "covariates": ["x1", "x2", "x3", "x4"],
      "mediators": [["m1"], ["m2"]]
    },
    "estimator": "eif2",
    "effects": [{"kind": "cPSE", "k": 2}, {"kind": "NDE"}],
    "seed": 7,
    "output": "cli_report.json"
  })");
  REQUIRE(run_cli("estimate --config cli_config.json") == 0);

  std::string body = pathmed::testing::slurp("cli_report.json");
  CHECK(validate_schema(body, report_schema()) == "");

  json r = json::parse(body);
  REQUIRE(r["effects"].size() == 2);
  double point = r["effects"][0]["point"].get<double>();
  double se = r["effects"][0]["se"].get<double>();
  CHECK(std::abs(point - 0.3264) < 3.0 * se);
  CHECK(r["effects"][0]["label"] == "cPSE_M2");
}

TEST_CASE("estimate: two identical imputations pool to the single-file answer") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  ObservedData d = generate(coeffs, 600, 91);
  pathmed::testing::write_dataset_csv(d, "imp1.csv");
  pathmed::testing::write_dataset_csv(d, "imp2.csv");
  std::string roles = R"("roles": {
      "treatment": "a", "outcome": "y",
      "covariates": ["x1", "x2", "x3", "x4"],
      "mediators": [["m1"], ["m2"]]
    })";
  write_file("imp_single.json", "{\"input\": [\"imp1.csv\"], " + roles +
                                    ", \"estimator\": \"eif2\", \"effects\": "
                                    "[{\"kind\": \"NDE\"}], \"output\": "
                                    "\"imp_single_report.json\"}");
  write_file("imp_double.json",
             "{\"input\": [\"imp1.csv\", \"imp2.csv\"], " + roles +
                 ", \"estimator\": \"eif2\", \"effects\": [{\"kind\": "
                 "\"NDE\"}], \"output\": \"imp_double_report.json\"}");
  REQUIRE(run_cli("estimate --config imp_single.json") == 0);
  REQUIRE(run_cli("estimate --config imp_double.json") == 0);
  json single = json::parse(pathmed::testing::slurp("imp_single_report.json"));
  json twice = json::parse(pathmed::testing::slurp("imp_double_report.json"));
  double se1 = single["effects"][0]["se"].get<double>();
  double se2 = twice["effects"][0]["se"].get<double>();
  CHECK(se1 == doctest::Approx(se2).epsilon(1e-10));
  CHECK(twice["effects"][0]["pooled"]["between_variance"].get<double>() == 0.0);
  CHECK(validate_schema(pathmed::testing::slurp("imp_double_report.json"),
                        report_schema()) == "");
}

TEST_CASE("estimate: a mediator-free two-arm layout gives the arm-mean difference") {
  ObservedData d;
  const Index n = 500;
  d.x.resize(n, 0);
  d.a.resize(n);
  d.y.resize(n);
  Rng rng(5);
  double s1 = 0, n1 = 0, s0 = 0, n0 = 0;
  for (Index i = 0; i < n; ++i) {
    d.a(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    d.y(i) = 1.0 + 0.7 * d.a(i) + rng.normal();
    (d.a(i) == 1.0 ? s1 : s0) += d.y(i);
    (d.a(i) == 1.0 ? n1 : n0) += 1.0;
  }
  pathmed::testing::write_dataset_csv(d, "k0.csv");
  write_file("k0.json", R"({
    "input": "k0.csv",
    "roles": {"treatment": "a", "outcome": "y"},
    "estimator": "eif2",
    "effects": [{"kind": "ATE"}],
    "output": "k0_report.json"
  })");
  REQUIRE(run_cli("estimate --config k0.json") == 0);
  json r = json::parse(pathmed::testing::slurp("k0_report.json"));
  double point = r["effects"][0]["point"].get<double>();
  CHECK(point == doctest::Approx(s1 / n1 - s0 / n0).epsilon(1e-6));
  CHECK(std::isfinite(r["effects"][0]["se"].get<double>()));
}

TEST_CASE("decompose: components sum to the total, orders permute") {
  DgpCoefficients coeffs = DgpCoefficients::defaults();
  ObservedData d = generate(coeffs, 900, 33);
  pathmed::testing::write_dataset_csv(d, "dec.csv");
  write_file("dec.json", R"({
    "input": "dec.csv",
    "roles": {
      "treatment": "a", "outcome": "y",
      "covariates": ["x1", "x2", "x3", "x4"],
      "mediators": [["m1"], ["m2"]]
    },
    "estimator": "eif2",
    "effects": [{"kind": "ATE"}],
    "output": "dec_report.json"
  })");
  REQUIRE(run_cli("decompose --config dec.json") == 0);
  json r = json::parse(pathmed::testing::slurp("dec_report.json"));
  CHECK(validate_schema(pathmed::testing::slurp("dec_report.json"),
                        report_schema()) == "");
  REQUIRE(r["effects"].size() == 4);  // total + three components
  double ate = r["effects"][0]["point"].get<double>();
  double total = 0.0;
  for (size_t t = 1; t < 4; ++t) total += r["effects"][t]["point"].get<double>();
  CHECK(std::abs(total - ate) < 1e-10);

  REQUIRE(run_cli("decompose --config dec.json --order 1,2,3 --output dec_b.json") == 0);
  json rb = json::parse(pathmed::testing::slurp("dec_b.json"));
  CHECK(rb["effects"][0]["point"].get<double>() == doctest::Approx(ate).epsilon(1e-12));
  // component labels are permuted with the order
  CHECK(r["effects"][1]["label"] != rb["effects"][1]["label"]);
}

TEST_CASE("disparity: degenerate groups fail, components telescope") {
  pathmed::testing::BinaryDgp dgp;
  ObservedData d = dgp.sample(700, 3);
  ObservedData g;
  g.x.resize(d.n(), 0);
  g.a = d.a;
  g.y = d.y;
  g.mediators = d.mediators;
  g.mediator_names = d.mediator_names;
  g.discrete = d.discrete;
  pathmed::testing::write_dataset_csv(g, "disp.csv");
  write_file("disp.json", R"({
    "input": "disp.csv",
    "roles": {
      "treatment": "a", "outcome": "y",
      "mediators": [["m1"], ["m2"]],
      "discrete": ["m1", "m2"]
    },
    "output": "disp_report.json"
  })");
  REQUIRE(run_cli("disparity --config disp.json") == 0);
  json r = json::parse(pathmed::testing::slurp("disp_report.json"));
  CHECK(validate_schema(pathmed::testing::slurp("disp_report.json"),
                        report_schema()) == "");
  double gap = r["effects"][0]["point"].get<double>();
  double total = 0.0;
  for (size_t t = 1; t < r["effects"].size(); ++t)
    total += r["effects"][t]["point"].get<double>();
  CHECK(std::abs(total - gap) < 1e-10);

  // a single-group file is a data error (exit code 3)
  ObservedData one = g;
  one.a.setConstant(1.0);
  pathmed::testing::write_dataset_csv(one, "disp_one.csv");
  CHECK(run_cli("disparity --config disp.json --input disp_one.csv") == 3);
}

TEST_CASE("simulate: tiny runs write both outputs and respect the seed") {
  REQUIRE(run_cli("simulate --reps 2 --n 200 --cases a --estimators eif2,ri "
                  "--seed 7 --out-csv sim_a.csv --out-json sim_a.json") == 0);
  REQUIRE(run_cli("simulate --reps 2 --n 200 --cases a --estimators eif2,ri "
                  "--seed 7 --out-csv sim_b.csv --out-json sim_b.json") == 0);
  std::string a = pathmed::testing::slurp("sim_a.csv");
  std::string b = pathmed::testing::slurp("sim_b.csv");
  CHECK(a == b);
  // two rows per estimator plus the header
  int lines = 0;
  for (char c : a) lines += c == '\n';
  CHECK(lines == 1 + 2 * 2);
  std::string summary = pathmed::testing::slurp("sim_a.json");
  CHECK(validate_schema(summary,
                        pathmed::testing::slurp(
                            g_source_dir + "/schemas/study_summary.schema.json")) ==
        "");
}

TEST_CASE("config errors exit with the config category") {
  write_file("broken.json", "{ not json");
  CHECK(run_cli("estimate --config broken.json") == 2);
  write_file("missing_col.json", R"({
    "input": "cli_data.csv",
    "roles": {"treatment": "nope", "outcome": "y"},
    "effects": [{"kind": "ATE"}],
    "output": "x.json"
  })");
  CHECK(run_cli("estimate --config missing_col.json") == 2);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: test_cli <cli-binary> <source-dir>\n");
    return 2;
  }
  g_cli = argv[1];
  g_source_dir = argv[2];
  doctest::Context ctx;
  return ctx.run();
}
