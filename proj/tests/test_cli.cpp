#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "classim_cli.hpp"

using namespace classim;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("classim_cli_" + name);
  std::ofstream(path) << content;
  return path.string();
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) row.push_back(parse_double(c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(CliThreshold, KnownValues) {
  const auto two = run_cli({"threshold", "--d", "2"});
  ASSERT_EQ(two.code, 0) << two.err;
  EXPECT_EQ(two.json()["v_star"].get<double>(), 0.5);
  const auto seven = run_cli({"threshold", "--d", "7"});
  EXPECT_NEAR(seven.json()["v_star"].get<double>(), 0.2655, 5e-5);
}

TEST(CliThreshold, CurveCsv) {
  const auto r = run_cli({"threshold", "--d", "3", "--curve", "0.2:0.9:0.01"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 8), "t,v,eta\n");
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 71u);
  EXPECT_EQ(rows.front()[0], 0.2);
  EXPECT_EQ(rows.back()[0], 0.9);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 3u);
    EXPECT_LE(rows[i][2], rows[i - 1][2] + 1e-12) << rows[i][0];
    EXPECT_GE(rows[i][1], rows[i - 1][1] - 1e-12) << rows[i][0];
  }
}

TEST(CliSearch, TwoAndThreeQubitMubs) {
  const auto two = run_cli({"search", "--family", "mub", "--d", "2", "--count", "2", "--n-lambda", "2000", "--seed", "7"});
  ASSERT_EQ(two.code, 0) << two.err;
  const double v2 = two.json()["v_star"].get<double>();
  EXPECT_GE(v2, 0.69);
  EXPECT_LE(v2, 0.7072);
  EXPECT_LE(two.json()["residual"].get<double>(), 1e-7);
  const auto three =
      run_cli({"search", "--family", "mub", "--d", "2", "--count", "3", "--n-lambda", "2000", "--seed", "7"});
  ASSERT_EQ(three.code, 0) << three.err;
  const double v3 = three.json()["v_star"].get<double>();
  EXPECT_GE(v3, 0.56);
  EXPECT_LE(v3, 0.5775);
}

TEST(CliSearch, TrineEigenbasesOnly) {
  const auto r = run_cli({"search", "--family", "trine", "--n-lambda", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(r.json()["v_star"].get<double>(), 0.0);
  EXPECT_LE(r.json()["residual"].get<double>(), 1e-7);
  EXPECT_EQ(r.json()["ensemble_size"], 3);
}

TEST(CliSearch, SeedDeterminismAndModelFile) {
  const std::vector<std::string> args{"search", "--family", "mub", "--d", "3", "--count", "2", "--n-lambda", "100", "--seed", "3"};
  const auto a = run_cli(args), b = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  auto other = args;
  other.back() = "4";
  EXPECT_NE(run_cli(other).out, a.out);

  const std::string model = temp_file("model.json", "");
  auto with_model = args;
  with_model.insert(with_model.end(), {"--model-out", model});
  const auto c = run_cli(with_model);
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.json()["model"], model);
  const ClassicalModel loaded = model_from_json(parse_json_text(read_file(model), model));
  EXPECT_LE(reconstruct(loaded, mub_set(3, 2)), 1e-7);
  EXPECT_NEAR(loaded.v, c.json()["v_star"].get<double>(), 1e-11);
}

TEST(CliWitness, QubitMubs) {
  const auto r = run_cli({"witness", "--family", "mub", "--d", "2", "--count", "2", "--state-discrimination"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = r.json();
  EXPECT_NEAR(j["W"].get<double>(), 4.0, 1e-10);
  EXPECT_NEAR(j["beta"].get<double>(), 2.0 + std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(j["v_crit"].get<double>(), 0.7071, 1e-4);
  EXPECT_EQ(j["verdict"], "VIOLATED");
  EXPECT_EQ(j["beta_method"], "exact-qubit");
}

TEST(CliWitness, SicSet) {
  const auto r = run_cli({"witness", "--family", "sic5", "--state-discrimination"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = r.json();
  EXPECT_NEAR(j["W"].get<double>(), 10.0, 1e-10);
  // Exact bound of the five-tetrahedra construction (see README).
  const double beta = 5.0 + std::sqrt(25.0 + 10.0 * std::sqrt(5.0)) / std::sqrt(3.0);
  EXPECT_NEAR(j["beta"].get<double>(), beta, 1e-9);
  EXPECT_NEAR(j["v_crit"].get<double>(), (beta - 5.0) / 5.0, 1e-9);
  EXPECT_EQ(j["verdict"], "VIOLATED");
}

TEST(CliWitness, FullyDepolarized) {
  const auto r =
      run_cli({"witness", "--family", "mub", "--d", "2", "--count", "2", "--state-discrimination", "--visibility", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json()["verdict"], "NOT VIOLATED");
  EXPECT_EQ(r.json()["violated"], false);
  EXPECT_EQ(r.json()["v_crit"].get<double>(), 1.0);
}

TEST(CliWitness, InputAndSpecFiles) {
  const std::string set = temp_file("set.json", dump_json(measurement_set_to_json(mub_set(2, 2))));
  const std::string spec = temp_file("spec.json", R"({"type": "state-discrimination"})");
  const auto r = run_cli({"witness", "--input", set, "--spec", spec});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["W"].get<double>(), 4.0, 1e-10);
  const auto q = run_cli({"witness", "--family", "mub", "--d", "3", "--count", "2", "--state-discrimination"});
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_EQ(q.json()["beta_method"], "sdp-relaxation");
}

TEST(CliNondisturb, PairModel) {
  const auto r = run_cli({"nondisturb", "--family", "mub", "--d", "2", "--count", "2", "--pair-model"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = r.json();
  EXPECT_EQ(j["classical_model_found"], true);
  EXPECT_LE(j["luders_residual"].get<double>(), 1e-7);
  EXPECT_LE(j["jm_marginal_residual"].get<double>(), 1e-7);
  EXPECT_EQ(j["v"].get<double>(), 0.5);
  EXPECT_NE(j["verdicts"][1].get<std::string>().find("Lüders non-disturbing"), std::string::npos);
}

TEST(CliNondisturb, TrineExtended) {
  const auto r = run_cli({"nondisturb", "--family", "trine", "--extend"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = r.json();
  EXPECT_LE(j["extended_residual"].get<double>(), 1e-12);
  EXPECT_EQ(j["extended_dim"], 5);
  EXPECT_NE(j["verdicts"][0].get<std::string>().find("Lüders-disturbing"), std::string::npos);
  EXPECT_GT(j["luders_residual"].get<double>(), 0.05);
}

TEST(CliNondisturb, SearchedAndLoadedModel) {
  const std::string model = temp_file("nd_model.json", "");
  ASSERT_EQ(run_cli({"search", "--family", "mub", "--d", "2", "--count", "3", "--n-lambda", "50", "--seed", "1",
                     "--model-out", model})
                .code,
            0);
  const auto r = run_cli({"nondisturb", "--family", "mub", "--d", "2", "--count", "3", "--x-a", "2", "--x-b", "0",
                          "--model", model});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json()["classical_model_found"], true);
  EXPECT_LE(r.json()["luders_residual"].get<double>(), 1e-7);
  const auto s = run_cli({"nondisturb", "--family", "mub", "--d", "3", "--count", "2"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_LE(s.json()["luders_residual"].get<double>(), 1e-7);
}

TEST(CliMcCheck, Values) {
  const auto two = run_cli({"mc-check", "--d", "2", "--samples", "100000", "--seed", "1"});
  ASSERT_EQ(two.code, 0) << two.err;
  EXPECT_NEAR(two.json()["mean"].get<double>(), 0.75, 5e-3);
  EXPECT_LT(std::abs(two.json()["z"].get<double>()), 3.0);
  const auto five = run_cli({"mc-check", "--d", "5", "--samples", "100000", "--seed", "1"});
  EXPECT_NEAR(five.json()["expected"].get<double>(), 0.456666666667, 1e-12);
  EXPECT_LT(std::abs(five.json()["z"].get<double>()), 3.0);
  const auto one = run_cli({"mc-check", "--d", "1", "--samples", "10", "--seed", "1"});
  EXPECT_EQ(one.json()["mean"].get<double>(), 1.0);
  EXPECT_EQ(run_cli({"mc-check", "--d", "3", "--samples", "500", "--seed", "9"}).out,
            run_cli({"mc-check", "--d", "3", "--samples", "500", "--seed", "9"}).out);
}

TEST(CliOutput, CsvAndFile) {
  const auto csv = run_cli({"mc-check", "--d", "1", "--samples", "4", "--seed", "1", "--format", "csv"});
  EXPECT_EQ(csv.out, "d,samples,mean,standard_error,expected,z\n1,4,1,0,1,0\n");
  const std::string path = temp_file("out.json", "");
  const auto r = run_cli({"threshold", "--d", "2", "--output", path});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(Json::parse(read_file(path))["v_star"].get<double>(), 0.5);
  EXPECT_EQ(run_cli({"threshold", "--help"}).code, 0);
}

TEST(CliExitCodes, InputErrors) {
  const std::string broken = temp_file("broken.json", "{\"dim\": 2, ");
  const std::string not_povm = temp_file("not_povm.json", R"({"dim": 1, "settings": [{"outcomes": [[[0.5]]]}]})");
  for (const std::vector<std::string>& args : std::vector<std::vector<std::string>>{
           {},
           {"bogus"},
           {"threshold"},
           {"threshold", "--d", "1"},
           {"threshold", "--d", "x"},
           {"threshold", "--d", "3", "--curve", "0.5:0.2:0.1"},
           {"threshold", "--d", "3", "--format", "xml"},
           {"mc-check", "--d", "2"},
           {"search", "--family", "mub", "--d", "2", "--n-lambda", "10"},
           {"search", "--family", "mub", "--d", "6", "--count", "2"},
           {"search", "--input", broken},
           {"search", "--input", "/nonexistent/set.json"},
           {"search", "--input", not_povm},
           {"search"},
           {"search", "--family", "trine", "--input", not_povm},
           {"witness", "--family", "trine"},
           {"nondisturb", "--family", "mub", "--d", "2", "--count", "2", "--x-a", "0", "--x-b", "5"},
           {"nondisturb", "--family", "trine", "--pair-model"},
       }) {
    const auto r = run_cli(args);
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    EXPECT_EQ(r.code, 2) << joined << "\n" << r.err;
    EXPECT_FALSE(r.err.empty()) << joined;
  }
}

TEST(CliExitCodes, SolverError) {
  const auto r = run_cli(
      {"search", "--family", "mub", "--d", "2", "--count", "2", "--n-lambda", "50", "--seed", "7", "--max-rounds", "1"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("did not converge"), std::string::npos);
}

TEST(CliExitCodes, GuardError) {
  const auto r = run_cli({"witness", "--family", "mub", "--d", "5", "--count", "5", "--state-discrimination"});
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_NE(r.err.find("5^(5*5)"), std::string::npos) << r.err;
}
