#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "acmptc/error.hpp"
#include "acmptc/export.hpp"
#include "acmptc_cli/cli.hpp"
#include "temp_dir.hpp"

namespace acmptc::cli {
namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "acmptc");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows - 1;  // header
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const CliRun r = invoke({"frobnicate"});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(invoke({}).code, kExitInvalid);
}

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  const CliRun v = invoke({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find(std::string(version())), std::string::npos);
}

TEST(Cli, SimulateOneStepWritesOneRowPerStream) {
  testing::TempDir dir("cli_sim");
  write_text_file(dir.path() / "cfg.json", R"({"run": {"horizon": 1}})");
  const CliRun r = invoke({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("out"), "--seed", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(data_rows(testing::slurp(dir.path() / "out" / "metrics.csv")), 3u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "config.json"));
}

TEST(Cli, BadConfigIsUsageError) {
  testing::TempDir dir("cli_bad");
  write_text_file(dir.path() / "cfg.json", R"({"dynamics": {"n_paths": 0}})");
  const CliRun r = invoke({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("out")});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("n_paths"), std::string::npos);
  EXPECT_EQ(invoke({"simulate", "--config", dir.str("missing.json"), "--out", dir.str("out")}).code, kExitRuntime);
}

TEST(Cli, SeedFallsBackToEnvironment) {
  testing::TempDir dir("cli_env");
  write_text_file(dir.path() / "cfg.json", R"({"run": {"horizon": 5}})");
  ::setenv("ACMPTC_SEED", "17", 1);
  const CliRun a = invoke({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("a")});
  ::unsetenv("ACMPTC_SEED");
  const CliRun b = invoke({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("b"), "--seed", "17"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_NE(a.out.find("seed 17"), std::string::npos);
  EXPECT_EQ(testing::slurp(dir.path() / "a" / "metrics.csv"), testing::slurp(dir.path() / "b" / "metrics.csv"));
}

TEST(Cli, ExplainConfig) {
  testing::TempDir dir("cli_explain");
  write_text_file(dir.path() / "cfg.json", R"({"run": {"horizon": 5}})");
  const CliRun r = invoke({"simulate", "--config", dir.str("cfg.json"), "--explain-config"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("run.horizon"), std::string::npos);
  EXPECT_NE(r.out.find("default"), std::string::npos);
}

TEST(Cli, GradcheckPasses) {
  const CliRun r = invoke({"gradcheck", "--networks", "5", "--params", "200"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
}

TEST(Cli, CompareWritesArtifacts) {
  testing::TempDir dir("cli_cmp");
  write_text_file(dir.path() / "cfg.json", R"({"run": {"horizon": 10}})");
  const CliRun r = invoke({"compare", "--config", dir.str("cfg.json"), "--out", dir.str("out"), "--seeds", "1..3",
                        "--schedulers", "mptcp,tcp,acmptc"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"comparison.json", "comparison_series.csv", "metrics_tcp.csv", "metrics_acmptc.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / f)) << f;
  }
  const CliRun plots = invoke({"export-plots", "--in", dir.str("out"), "--out", dir.str("plots")});
  ASSERT_EQ(plots.code, kExitOk) << plots.err;
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "plots" / "latency_distribution.csv"));
}

TEST(Cli, TrainWritesCheckpointPerSeed) {
  testing::TempDir dir("cli_train");
  write_text_file(dir.path() / "cfg.json",
                  R"({"agent": {"episodes": 2, "horizon": 5, "hidden_layers": [8]}, "run": {"horizon": 5}})");
  const CliRun r = invoke({"train", "--config", dir.str("cfg.json"), "--out", dir.str("out"), "--seeds", "1,2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "checkpoint_seed2.json"));
  const CliRun sim = invoke({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("sim"), "--scheduler",
                          "acmptc_drl", "--checkpoint", dir.str("out/checkpoint_seed1.json")});
  EXPECT_EQ(sim.code, kExitOk) << sim.err;
}

TEST(SeedList, Forms) {
  EXPECT_EQ(parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(parse_seed_list("3..5"), (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(parse_seed_list("1,4,5"), (std::vector<std::uint64_t>{1, 4, 5}));
  EXPECT_THROW(parse_seed_list(""), InputError);
  EXPECT_THROW(parse_seed_list("5..3"), InputError);
  EXPECT_THROW(parse_seed_list("a"), InputError);
}

}  // namespace
}  // namespace acmptc::cli
