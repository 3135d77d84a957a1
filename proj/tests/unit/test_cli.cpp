#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/cli.hpp"
#include "mcause/dataset.hpp"
#include "mcause/random.hpp"
#include "mcause/scm.hpp"
#include "mcause/serialization.hpp"

namespace fs = std::filesystem;
using mcause::Json;

namespace {

// Runs each test inside a fresh directory so relative paths stay short.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    previous_ = fs::current_path();
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mcause_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    fs::current_path(dir_);
  }
  void TearDown() override {
    fs::current_path(previous_);
    fs::remove_all(dir_);
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "mcause");
    out_.str("");
    err_.str("");
    return mcause::cli::run(args, out_, err_);
  }

  static Json read_json(const fs::path& p) {
    std::ifstream in(p);
    return Json::parse(in);
  }
  static std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  static void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
  }

  std::ostringstream out_;
  std::ostringstream err_;

 private:
  fs::path previous_;
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndVersionExitZero) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("simulate"), std::string::npos);
  EXPECT_EQ(run({"gate", "--help"}), 0);
  EXPECT_NE(out_.str().find("--alpha"), std::string::npos);
}

TEST_F(CliTest, MalformedInputExitsOne) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"nonsense"}), 1);
  EXPECT_EQ(run({"fit"}), 1);  // --data missing
  EXPECT_EQ(run({"fit", "--data", "missing.csv"}), 1);
  EXPECT_EQ(run({"simulate", "--n", "ten"}), 1);
  EXPECT_EQ(run({"simulate", "--format", "xml"}), 1);

  write_text("bad.csv", "A1,A2\n0,1\n1,x\n");
  EXPECT_EQ(run({"fit", "--data", "bad.csv"}), 1);
  write_text("cfg.json", R"({"n": 10, "no_such_key": 1})");
  EXPECT_EQ(run({"simulate", "--config", "cfg.json"}), 1);
  EXPECT_NE(err_.str().find("no_such_key"), std::string::npos);
  write_text("broken.json", "{");
  EXPECT_EQ(run({"simulate", "--config", "broken.json"}), 1);
}

TEST_F(CliTest, FlagsOverrideConfigFileAndConfigIsRecorded) {
  write_text("cfg.json", R"({"n": 50, "seed": 4, "z_card": 3})");
  ASSERT_EQ(run({"simulate", "--config", "cfg.json", "--n", "20", "--out-dir", "sim"}), 0) << err_.str();
  auto scm = read_json("sim/scm.json");
  EXPECT_EQ(scm["config"]["n"], 20);
  EXPECT_EQ(scm["config"]["seed"], 4);
  EXPECT_EQ(scm["config"]["z_card"], 3);
  EXPECT_EQ(scm["seed"], 4);
  EXPECT_EQ(scm["scm"]["z"]["card"], 3);
  std::ifstream data("sim/data.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(data, l);) ++lines;
  EXPECT_EQ(lines, 21u);
}

TEST_F(CliTest, SimulateIsBitReproducible) {
  std::vector<std::string> args{"simulate", "--seed", "11", "--n", "300", "--x-card", "2", "--out-dir", "s"};
  ASSERT_EQ(run(args), 0) << err_.str();
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator("s")) first[e.path().filename()] = read_text(e.path());
  ASSERT_EQ(run(args), 0);
  for (const auto& [name, body] : first) EXPECT_EQ(read_text(fs::path("s") / name), body) << name;
  EXPECT_FALSE(fs::exists("s/scm.json.tmp"));
}

TEST_F(CliTest, SingleClassFitMatchesColumnFrequencies) {
  write_text("d.csv", "A1,A2,Y\n0,1,0\n1,1,1\n1,0,0\n1,1,1\n");
  ASSERT_EQ(run({"fit", "--data", "d.csv", "--classes", "1", "--bic-classes", "1"}), 0) << err_.str();
  auto model = read_json("model.json")["model"];
  EXPECT_EQ(model["columns"].size(), 2u);
  EXPECT_NEAR(model["theta"][0][0][1].get<double>(), 0.75, 1e-12);
  EXPECT_NEAR(model["theta"][1][0][1].get<double>(), 0.75, 1e-12);
  auto report = read_json("fit_report.json");
  EXPECT_TRUE(report["report"]["converged"].get<bool>());
}

TEST_F(CliTest, FitFlagsNonConvergenceAtOneIteration) {
  ASSERT_EQ(run({"simulate", "--seed", "2", "--n", "400", "--out-dir", "s"}), 0);
  ASSERT_EQ(run({"fit", "--data", "s/data.csv", "--max-iter", "1", "--restarts", "2",
                 "--bic-classes", "2"}),
            0);
  EXPECT_FALSE(read_json("fit_report.json")["report"]["converged"].get<bool>());
  EXPECT_NE(err_.str().find("without converging"), std::string::npos);
}

TEST_F(CliTest, GateExitCodesFollowTheDecision) {
  // Null: causes independent given the true confounder.
  ASSERT_EQ(run({"simulate", "--seed", "5", "--n", "2000", "--out-dir", "s"}), 0);
  EXPECT_EQ(run({"gate", "--data", "s/data.csv", "--zhat", "s/hidden_z.csv", "--permutations", "199",
                 "--power-trials", "4", "--bonferroni"}),
            0)
      << out_.str();
  auto rep = read_json("gate_report.json");
  EXPECT_EQ(rep["report"]["decision"], "PASS");

  // Alternative: A2 is a copy of A1 on every row.
  std::ifstream in("s/data.csv");
  std::ofstream copied("copied.csv");
  std::string line;
  std::getline(in, line);
  copied << line << "\n";
  while (std::getline(in, line)) {
    line[2] = line[0];
    copied << line << "\n";
  }
  copied.close();
  EXPECT_EQ(run({"gate", "--data", "copied.csv", "--zhat", "s/hidden_z.csv", "--permutations", "199",
                 "--power-trials", "4"}),
            2);
  EXPECT_EQ(read_json("gate_report.json")["report"]["decision"], "FAIL");
}

TEST_F(CliTest, ZhatMismatchRefusalExitsThree) {
  ASSERT_EQ(run({"simulate", "--seed", "1", "--n", "10", "--out-dir", "s"}), 0);
  EXPECT_EQ(run({"identify", "--estimand", "thm8", "--scm", "s/scm.json", "--a", "1,0,0", "--a-prime",
                 "0,0,0", "--zhat-causes", "A1"}),
            3);
  EXPECT_NE(err_.str().find("ZhatMismatch"), std::string::npos);
  auto est = read_json("estimand.json");
  EXPECT_EQ(est["refusal"]["type"], "ZhatMismatch");
  EXPECT_TRUE(est["distribution"].is_null());

  // Same zhat class: identified, equals the structural counterfactual only when
  // zhat recovers Z, so just check it is a distribution.
  EXPECT_EQ(run({"identify", "--estimand", "counterfactual", "--scm", "s/scm.json", "--a", "1,0,0",
                 "--a-prime", "1,1,1", "--zhat-causes", "A1"}),
            0);
  auto ok = read_json("estimand.json");
  double total = 0.0;
  for (const auto& p : ok["distribution"]) total += p.get<double>();
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST_F(CliTest, AdjustMatchesGroundTruth) {
  ASSERT_EQ(run({"simulate", "--seed", "8", "--n", "10", "--z-card", "3", "--out-dir", "s"}), 0);
  ASSERT_EQ(run({"identify", "--scm", "s/scm.json", "--a", "0,1,1"}), 0) << err_.str();
  auto est = read_json("estimand.json");
  auto truth = read_json("s/ground_truth.json")["potential_outcomes"];
  Json expected;
  for (const auto& row : truth)
    if (row["a"] == Json::array({0, 1, 1})) expected = row["dist"];
  ASSERT_FALSE(expected.is_null());
  for (std::size_t y = 0; y < expected.size(); ++y)
    EXPECT_NEAR(est["distribution"][y].get<double>(), expected[y].get<double>(), 1e-10);
  EXPECT_TRUE(est["overlap_report"]["satisfied"].get<bool>());
}

TEST_F(CliTest, OverlapRefusalFromSparseData) {
  write_text("d.csv", "A1,A2,Y\n0,0,0\n0,1,1\n1,1,0\n1,1,1\n");
  EXPECT_EQ(run({"identify", "--estimand", "focal", "--source", "data", "--data", "d.csv", "--focal", "A1",
                 "--a", "1"}),
            3);
  EXPECT_EQ(read_json("estimand.json")["refusal"]["type"], "OverlapViolation");
}

TEST_F(CliTest, SensitivityBudgetZeroIsNaivePoint) {
  ASSERT_EQ(run({"simulate", "--seed", "3", "--n", "10", "--out-dir", "s"}), 0);
  ASSERT_EQ(run({"sensitivity", "--scm", "s/scm.json", "--a", "1,1,0", "--budgets", "0,0.5,inf",
                 "--functional", "prob:1"}),
            0)
      << err_.str();
  auto rep = read_json("sensitivity_report.json");
  const auto& rows = rep["report"]["rows"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0]["lower"].get<double>(), rep["report"]["naive"].get<double>(), 1e-9);
  EXPECT_NEAR(rows[0]["upper"].get<double>(), rep["report"]["naive"].get<double>(), 1e-9);
  EXPECT_EQ(rows[2]["budget"], "inf");
  EXPECT_TRUE(rep["checks"]["monotone_widths"].get<bool>());
  EXPECT_TRUE(rep["checks"]["truth_in_full_region"].get<bool>());
  std::string csv = read_text("sensitivity.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "budget,lower,upper,width,solver,attained_q_digest");
  EXPECT_EQ(run({"sensitivity", "--scm", "s/scm.json", "--budgets", "-1"}), 1);
}

TEST_F(CliTest, DemoNonidChecksPass) {
  ASSERT_EQ(run({"demo-nonid", "--out-dir", "demo"}), 0) << err_.str();
  auto cmp = read_json("demo/comparison.json")["comparison"];
  EXPECT_LE(cmp["observed_max_abs_diff"].get<double>(), 1e-10);
  EXPECT_GE(cmp["tv_gap"].get<double>(), 0.05);
  EXPECT_TRUE(cmp["checks"]["independent_member_equals_naive"].get<bool>());
  // An unreachable gap requirement turns the run into an error.
  EXPECT_EQ(run({"demo-nonid", "--out-dir", "demo", "--min-gap", "0.99"}), 1);
}
