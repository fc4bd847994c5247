// End-to-end tests of the annulus-energy binary (path injected by CMake).
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(ANNULUS_CLI_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return {WEXITSTATUS(rc)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("annulus_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()
                                            ->current_test_info()
                                            ->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out() const { return dir_.string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SolveLinearGeometry) {
  const auto r = run("solve --n 3 --r 1 --R 2 --r-star 3 --R-star 6 --alpha 0.5 --out " + out());
  EXPECT_EQ(r.exit_code, 0);
  const auto rep = nlohmann::json::parse(slurp(dir_ / "report.json"));
  EXPECT_DOUBLE_EQ(rep.at("lambda_star").get<double>(), 3.0);
  EXPECT_EQ(rep.at("case").get<std::string>(), "linear");
  ASSERT_TRUE(fs::exists(dir_ / "profile.csv"));
}

TEST_F(CliTest, SolveGenericGeometryWritesFiles) {
  const auto r = run("solve --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --out " + out());
  EXPECT_EQ(r.exit_code, 0);
  const auto rep = nlohmann::json::parse(slurp(dir_ / "report.json"));
  EXPECT_EQ(rep.at("case").get<std::string>(), "expanding");
  EXPECT_GT(rep.at("energy_total").get<double>(), 0.0);
  EXPECT_LT(rep.at("el_residual").get<double>(), 1e-5);
  // profile has a header and grid rows
  std::istringstream csv(slurp(dir_ / "profile.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "s,H,Hdot,H_minus_s_Hdot,lagrangian");
}

TEST_F(CliTest, MissingFlagIsUsageError) {
  EXPECT_EQ(run("solve --n 2 --r 1 --R 2 --r-star 1 --alpha 0.5").exit_code, 2);
  EXPECT_EQ(run("definitely-not-a-command").exit_code, 2);
  EXPECT_EQ(run("").exit_code, 2);
}

TEST_F(CliTest, BadGeometryIsUsageError) {
  EXPECT_EQ(
      run("solve --n 2 --r 2 --R 1 --r-star 1 --R-star 3 --alpha 0.5 --out " + out()).exit_code,
      2);
  EXPECT_EQ(
      run("verify --n 2 --r 2 --R 1 --r-star 1 --R-star 3 --alpha 0.5 --out " + out()).exit_code,
      2);
}

TEST_F(CliTest, DeterministicOutputs) {
  const std::string args =
      "solve --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --grid 128 --out ";
  ASSERT_EQ(run(args + out()).exit_code, 0);
  const std::string profile1 = slurp(dir_ / "profile.csv");
  const std::string report1 = slurp(dir_ / "report.json");
  ASSERT_EQ(run(args + out()).exit_code, 0);
  EXPECT_EQ(slurp(dir_ / "profile.csv"), profile1);
  EXPECT_EQ(slurp(dir_ / "report.json"), report1);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const fs::path cfg = dir_ / "problem.conf";
  std::ofstream(cfg) << "n=2\nr=1\nR=2\nr-star=1\nR-star=3\nalpha=0.5\ngrid=96\n";
  ASSERT_EQ(run("solve --config " + cfg.string() + " --out " + out()).exit_code, 0);
  std::istringstream csv(slurp(dir_ / "profile.csv"));
  int lines = 0;
  std::string line;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 97);  // header + 96 grid rows

  // flag overrides the config value
  ASSERT_EQ(
      run("solve --config " + cfg.string() + " --grid 64 --out " + out()).exit_code, 0);
  std::istringstream csv2(slurp(dir_ / "profile.csv"));
  lines = 0;
  while (std::getline(csv2, line)) ++lines;
  EXPECT_EQ(lines, 65);
}

TEST_F(CliTest, EnergyRoundTripOnSolvedProfile) {
  const std::string common = "--n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5";
  ASSERT_EQ(run("solve " + common + " --out " + out()).exit_code, 0);
  const std::string solve_report = slurp(dir_ / "report.json");
  ASSERT_EQ(run("energy " + common + " --profile " + (dir_ / "profile.csv").string() +
                " --out " + out())
                .exit_code,
            0);
  const auto solved = nlohmann::json::parse(solve_report);
  const auto evaluated = nlohmann::json::parse(slurp(dir_ / "report.json"));
  // identical profile, identical discrete functional: identical numbers
  EXPECT_EQ(evaluated.at("energy_total").get<double>(),
            solved.at("energy_total").get<double>());
  EXPECT_EQ(evaluated.at("case").get<std::string>(), solved.at("case").get<std::string>());
  EXPECT_TRUE(evaluated.at("lambda_star").is_null());
}

TEST_F(CliTest, JsonProfileFormat) {
  const auto r = run("solve --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 "
                     "--grid 64 --format json --out " +
                     out());
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_TRUE(fs::exists(dir_ / "profile.json"));
  const auto prof = nlohmann::json::parse(slurp(dir_ / "profile.json"));
  ASSERT_EQ(prof.at("s").size(), 64u);
  EXPECT_EQ(prof.at("H").size(), 64u);
  EXPECT_EQ(prof.at("Hdot").size(), 64u);
  EXPECT_DOUBLE_EQ(prof.at("H")[0].get<double>(), 1.0);
}

TEST_F(CliTest, EnergyFromTwoColumnCsv) {
  // a hand-made linear profile with only s,H columns: slopes come from
  // finite differences
  std::ofstream csv(dir_ / "lin.csv");
  csv << "s,H\n" << std::setprecision(17);
  const int N = 64;
  for (int i = 0; i < N; ++i) {
    const double s = 1.0 + i / (N - 1.0);
    csv << s << ',' << 3 * s << '\n';
  }
  csv.close();
  const auto r = run("energy --n 3 --r 1 --R 2 --r-star 3 --R-star 6 --alpha 0.5 --profile " +
                     (dir_ / "lin.csv").string() + " --out " + out());
  EXPECT_EQ(r.exit_code, 0);
  const auto rep = nlohmann::json::parse(slurp(dir_ / "report.json"));
  EXPECT_EQ(rep.at("case").get<std::string>(), "linear");
  // omega n^{n/2} (a c^n + b)(R^n - r^n)/n with n=3, c=3
  const double total = rep.at("energy_total").get<double>();
  EXPECT_NEAR(total / 5.196152422706632, 1.0, 1e-9);
}

TEST_F(CliTest, LambdaSweepBracketsRoot) {
  ASSERT_EQ(run("sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --param lambda "
                "--from 0.3 --to 5 --count 9 --log --grid 64 --out " +
                out())
                .exit_code,
            0);
  std::istringstream csv(slurp(dir_ / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "lambda,H_R,energy_total");
  bool below = false, above = false;
  double prev_hr = -1e300;
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    const double hr = std::stod(cell);
    EXPECT_GT(hr, prev_hr);  // monotone in lambda
    prev_hr = hr;
    (hr < 3.0 ? below : above) = true;
  }
  EXPECT_TRUE(below && above);  // sign change of H_lambda(R) - R* visible
}

TEST_F(CliTest, AlphaSweepContinuity) {
  ASSERT_EQ(run("sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --param alpha "
                "--from 0.1 --to 0.9 --count 9 --grid 128 --out " +
                out())
                .exit_code,
            0);
  std::istringstream csv(slurp(dir_ / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "alpha,lambda_star,energy_total");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 9);
}

TEST_F(CliTest, EmptySweepRangeIsUsageError) {
  EXPECT_EQ(run("sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --param lambda "
                "--from 1 --to 1 --count 5 --out " +
                out())
                .exit_code,
            2);
  EXPECT_EQ(run("sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --param lambda "
                "--from 1 --to 2 --count 0 --out " +
                out())
                .exit_code,
            2);
}

TEST_F(CliTest, VerifySmallBattery) {
  const auto r = run("verify --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 "
                     "--trials 12 --oracle-grid 48 --grid 128 --out " +
                     out());
  EXPECT_EQ(r.exit_code, 0);
  const auto doc = nlohmann::json::parse(slurp(dir_ / "verify_report.json"));
  bool planar_found = false;
  for (const auto& c : doc.at("checks")) {
    EXPECT_NE(c.at("status").get<std::string>(), "FAIL") << c.at("name").get<std::string>();
    if (c.at("name") == "planar_coefficient_crosscheck") {
      planar_found = true;
      EXPECT_TRUE(c.at("data").contains("deviation_normalized_weights"));
      EXPECT_TRUE(c.at("data").contains("deviation_raw_weights"));
    }
  }
  EXPECT_TRUE(planar_found);
}

TEST_F(CliTest, VerifyZeroTrialsSkipsDominance) {
  const auto r = run("verify --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 "
                     "--trials 0 --oracle-grid 48 --grid 128 --out " +
                     out());
  EXPECT_EQ(r.exit_code, 0);
  const auto doc = nlohmann::json::parse(slurp(dir_ / "verify_report.json"));
  bool found = false;
  for (const auto& c : doc.at("checks"))
    if (c.at("name") == "dominance") {
      found = true;
      EXPECT_EQ(c.at("status").get<std::string>(), "SKIP");
    }
  EXPECT_TRUE(found);
}

TEST_F(CliTest, ThreadCapEnvRespected) {
  // same sweep under a 1-thread cap must produce byte-identical output
  ASSERT_EQ(run("sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 --param lambda "
                "--from 0.5 --to 2 --count 6 --grid 64 --out " +
                out())
                .exit_code,
            0);
  const std::string first = slurp(dir_ / "sweep.csv");
  const std::string cmd = std::string("ANNULUS_ENERGY_THREADS=1 ") + ANNULUS_CLI_BIN +
                          " sweep --n 2 --r 1 --R 2 --r-star 1 --R-star 3 --alpha 0.5 "
                          "--param lambda --from 0.5 --to 2 --count 6 --grid 64 --out " +
                          out() + " > /dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_EQ(slurp(dir_ / "sweep.csv"), first);
}
