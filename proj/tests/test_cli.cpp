#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {
const std::string kBin = SIGMAKFLOW_BIN;
const std::string kConfigs = SIGMAKFLOW_CONFIGS;

fs::path out_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sigmakflow_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = "env -u OUTPUT_DIR " + kBin + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}
}  // namespace

TEST(Cli, CompareExactSucceeds) {
  const auto out = out_dir("compare");
  EXPECT_EQ(run("compare-exact --config " + kConfigs + "/compare_exact.cfg --out " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(j["subcommand"], "compare-exact");
  EXPECT_EQ(j["exitCode"], 0);
  EXPECT_LT(j["result"]["supError"].get<double>(), 5e-3);
  EXPECT_TRUE(fs::exists(out / "monitors" / "00_exact_error.csv"));
  EXPECT_TRUE(fs::exists(out / "monitors" / "plot.gp"));
  EXPECT_TRUE(fs::exists(out / "timing.json"));
  fs::remove_all(out);
}

TEST(Cli, ConditionAHolds) {
  const auto out = out_dir("conda");
  EXPECT_EQ(run("check-condition-a --config " + kConfigs + "/check_condition_a.cfg --out " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(j["result"]["holds"], true);
  EXPECT_NEAR(j["result"]["minSupport"].get<double>(), 3.0, 1e-12);
  fs::remove_all(out);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto out = out_dir("bad");
  EXPECT_EQ(run("flow-dual --config " + kConfigs + "/malformed.cfg --out " + out.string()), 2);
  EXPECT_EQ(run("flow-dual --config /nonexistent.cfg --out " + out.string()), 2);
  EXPECT_EQ(run("flow-dual --out " + out.string()), 2);
  EXPECT_EQ(run("no-such-subcommand --config " + kConfigs + "/flow_dual.cfg"), 2);
  EXPECT_EQ(run("flow-dual --config " + kConfigs + "/flow_dual.cfg --threads -3"), 2);
  fs::remove_all(out);
}

TEST(Cli, FailedMonitorExitsOne) {
  const auto dir = out_dir("strict");
  fs::create_directories(dir);
  // same run with an impossible tolerance
  std::string text = slurp(kConfigs + "/compare_exact.cfg");
  text.replace(text.find("exact_tol = 5e-3"), 16, "exact_tol = 1e-12");
  std::ofstream(dir / "strict.cfg") << text;
  EXPECT_EQ(run("compare-exact --config " + (dir / "strict.cfg").string() + " --out " + (dir / "o").string()), 1);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "summary.json"));
  EXPECT_EQ(j["monitors"][0]["pass"], false);
  EXPECT_EQ(j["exitCode"], 1);
  fs::remove_all(dir);
}

TEST(Cli, OutputDirPrecedence) {
  const auto env = out_dir("env"), flag = out_dir("flag");
  const std::string base = kBin + " legendre --config " + kConfigs + "/legendre.cfg";
  ASSERT_EQ(std::system(("OUTPUT_DIR=" + env.string() + " " + base + " > /dev/null 2>&1").c_str()), 0);
  EXPECT_TRUE(fs::exists(env / "summary.json"));
  ASSERT_EQ(std::system(("OUTPUT_DIR=" + env.string() + " " + base + " --out " + flag.string() + " > /dev/null 2>&1").c_str()), 0);
  EXPECT_TRUE(fs::exists(flag / "summary.json"));
  fs::remove_all(env);
  fs::remove_all(flag);
}

TEST(Cli, SummaryIsReproducible) {
  const auto a = out_dir("rep_a"), b = out_dir("rep_b");
  ASSERT_EQ(run("flow-dual --config " + kConfigs + "/flow_dual.cfg --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run("flow-dual --config " + kConfigs + "/flow_dual.cfg --threads 4 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(slurp(a / "final.snap"), slurp(b / "final.snap"));
  EXPECT_EQ(slurp(a / "monitors" / "01_comparison.csv"), slurp(b / "monitors" / "01_comparison.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}
