#include <gtest/gtest.h>

#include <sstream>

#include "acmptc/checkpoint.hpp"
#include "acmptc/config.hpp"
#include "acmptc/error.hpp"
#include "acmptc/export.hpp"
#include "json.hpp"
#include "temp_dir.hpp"

namespace acmptc {
namespace {

using nlohmann::json;

TEST(Config, EmptyDocumentGivesDefaults) {
  EXPECT_EQ(parse_config(""), ScenarioConfig{});
  EXPECT_EQ(parse_config("{}"), ScenarioConfig{});
}

TEST(Config, OverridesAndNesting) {
  const ScenarioConfig c = parse_config(R"({
    "dynamics": {"n_paths": 3, "bandwidth_range": [20, 80], "seed": 9},
    "streams": [{"expected_rate_mbps": 5}, {"expected_rate_mbps": 7, "max_paths": 2}],
    "control": {"C_th": 0.7, "target_tau": [0.8, 0.8, 0.9]},
    "agent": {"episodes": 3, "hidden_layers": [16]},
    "run": {"horizon": 50, "scheduler": "mptcp", "scenario_kind": "extreme", "trace_path": null}
  })");
  EXPECT_EQ(c.dynamics.n_paths, 3);
  EXPECT_EQ(c.dynamics.bandwidth_range.min, 20.0);
  EXPECT_EQ(c.dynamics.seed, 9u);
  ASSERT_EQ(c.streams.size(), 2u);
  EXPECT_EQ(c.streams[1].stream_id, 1);
  EXPECT_EQ(c.streams[1].max_paths, 2);
  EXPECT_EQ(c.streams[0].weight_gamma, StreamSpec{}.weight_gamma);
  EXPECT_EQ(c.control.C_th, 0.7);
  EXPECT_EQ(c.agent.hidden_layers, std::vector<std::size_t>{16});
  EXPECT_EQ(c.horizon, 50);
  EXPECT_EQ(c.scheduler, SchedulerKind::mptcp);
  EXPECT_EQ(c.scenario_kind, ScenarioKind::extreme);
  EXPECT_FALSE(c.trace_path.has_value());
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    parse_config(text);
    ADD_FAILURE() << "expected ConfigError for " << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Config, ErrorsNameTheKey) {
  expect_config_error(R"({"dynamics": {"n_paths": 0}})", "n_paths");
  expect_config_error(R"({"dynamics": {"n_pathz": 3}})", "n_pathz");
  expect_config_error(R"({"dynamics": {"n_paths": "five"}})", "n_paths");
  expect_config_error(R"({"network": {}})", "network");
  expect_config_error(R"({"control": {"C_th": 2}})", "C_th");
  expect_config_error(R"({"run": {"scheduler": "bbr"}})", "bbr");
  expect_config_error(R"({"dynamics": {"loss_range": [0.1, 0.01]}})", "loss_range");
  EXPECT_THROW(parse_config("{ not json"), ConfigError);
  EXPECT_THROW(load_config_file("/nonexistent/acmptc.json"), IoError);
}

TEST(Config, SerializeRoundTrip) {
  ScenarioConfig c;
  c.dynamics.n_paths = 4;
  c.control.target_tau = {0.7, 0.8, 0.9, 1.0};
  c.agent.learning_rate = 0.003;
  c.trace_path = "data/traces/paths_5x60.csv";
  c.scheduler = SchedulerKind::acmptc_drl;
  const std::string text = serialize_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  EXPECT_EQ(parse_config(serialize_config(ScenarioConfig{})), ScenarioConfig{});
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"default", "variable", "extreme", "trace_driven", "quick_drl"}) {
    EXPECT_NO_THROW(load_config_file(std::string(ACMPTC_TEST_DATA_DIR) + "/configs/" + name + ".json")) << name;
  }
}

TEST(Config, ExplainMarksSources) {
  const auto entries = explain_config(R"({"run": {"horizon": 5}})");
  bool saw_horizon = false, saw_default = false;
  for (const ConfigEntry& e : entries) {
    if (e.key == "run.horizon") {
      saw_horizon = true;
      EXPECT_EQ(e.value, "5");
      EXPECT_EQ(e.source, "config");
    }
    if (e.key == "dynamics.n_paths") {
      saw_default = true;
      EXPECT_EQ(e.source, "default");
      EXPECT_FALSE(e.origin.empty());
    }
  }
  EXPECT_TRUE(saw_horizon);
  EXPECT_TRUE(saw_default);
  EXPECT_NE(format_explanation(entries).find("run.horizon"), std::string::npos);
}

TEST(Export, NumberFormat) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(1.5), "1.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333");
  EXPECT_EQ(format_number(123456789.0), "1.23457e+08");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_THROW(format_number(NAN), InputError);
  EXPECT_THROW(format_number(INFINITY), InputError);
}

TEST(Export, MetricsCsvSingleRow) {
  MetricsRecord r;
  r.t = 0;
  r.stream_id = 0;
  r.delivered_mbps = 9.5;
  r.latency_ms = 20;
  r.loss_rate = 0.01;
  r.qos = 0.75;
  r.utility = 0.5;
  r.assigned_paths = {0, 2};
  std::ostringstream os;
  write_metrics_csv(os, std::span<const MetricsRecord>(&r, 1));
  EXPECT_EQ(os.str(), "# acmptc " + std::string(version()) + "\n" + std::string(kMetricsHeader) +
                          "\n0,0,9.5,20,0.01,0.75,0.5,0|2\n");
  std::istringstream in(os.str());
  const auto back = read_metrics_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].assigned_paths, r.assigned_paths);
  EXPECT_EQ(back[0].delivered_mbps, 9.5);
}

TEST(Export, MetricsCsvSortsAndIsDeterministic) {
  ScenarioConfig cfg;
  cfg.horizon = 10;
  const EpisodeResult a = run_episode(cfg, 1);
  const EpisodeResult b = run_episode(cfg, 1);
  std::vector<MetricsRecord> shuffled(a.records.rbegin(), a.records.rend());
  std::ostringstream x, y, z;
  write_metrics_csv(x, a.records);
  write_metrics_csv(y, b.records);
  write_metrics_csv(z, shuffled);
  EXPECT_EQ(x.str(), y.str());
  EXPECT_EQ(x.str(), z.str());
  EXPECT_EQ(summary_json(a), summary_json(b));
}

TEST(Export, SummaryJsonFields) {
  ScenarioConfig cfg;
  cfg.horizon = 10;
  const json j = json::parse(summary_json(run_episode(cfg, 2)));
  for (const char* key : {"mean_throughput_mbps", "p95_latency_ms", "mean_loss", "mean_qos", "mean_utility",
                          "cumulative_throughput", "violations"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Export, PlotsFromMetricsFiles) {
  testing::TempDir in("plots_in"), out("plots_out");
  ScenarioConfig cfg;
  cfg.horizon = 10;
  for (SchedulerKind k : {SchedulerKind::tcp, SchedulerKind::acmptc}) {
    cfg.scheduler = k;
    std::ostringstream os;
    write_metrics_csv(os, run_episode(cfg, 1).records);
    write_text_file(in.path() / ("metrics_" + std::string(to_string(k)) + ".csv"), os.str());
  }
  const auto files = export_plots(in.path(), out.path());
  EXPECT_EQ(files.size(), 4u);
  const std::string tput = testing::slurp(out.path() / "throughput_over_time.csv");
  EXPECT_NE(tput.find("\ntcp,0,"), std::string::npos);
  EXPECT_NE(tput.find("\nacmptc,9,"), std::string::npos);
  EXPECT_THROW(export_plots(out.path() / "missing", out.path()), IoError);
}

TEST(Checkpoint, ByteIdenticalRoundTrip) {
  Rng rng(21);
  AgentConfig cfg;
  cfg.hidden_layers = {8, 4};
  cfg.learning_rate = 0.1 / 3.0;
  Checkpoint ckpt{cfg, {}};
  for (int j = 0; j < 3; ++j) ckpt.agents.push_back(make_agent(22, 45, cfg, rng));
  const std::string text = serialize_checkpoint(ckpt);
  const Checkpoint back = parse_checkpoint(text);
  EXPECT_EQ(back, ckpt);
  EXPECT_EQ(serialize_checkpoint(back), text);

  testing::TempDir dir("ckpt");
  save_checkpoint(dir.str("a.json"), ckpt);
  EXPECT_EQ(load_checkpoint(dir.str("a.json")), ckpt);
  EXPECT_EQ(testing::slurp(dir.path() / "a.json"), text);
}

TEST(Checkpoint, RejectsBadDocuments) {
  EXPECT_THROW(parse_checkpoint("[]"), ParseError);
  EXPECT_THROW(parse_checkpoint("{"), ParseError);
  Rng rng(22);
  AgentConfig cfg;
  cfg.hidden_layers = {3};
  const Checkpoint ckpt{cfg, {make_agent(4, 9, cfg, rng)}};
  const json good = json::parse(serialize_checkpoint(ckpt));
  json j = good;
  j["agents"][0]["actor"][0]["weights"].erase(0);
  EXPECT_THROW(parse_checkpoint(j.dump()), ShapeError);
  j = good;
  j["agent_config"]["hidden_layers"] = {5};
  EXPECT_THROW(parse_checkpoint(j.dump()), ShapeError);
  j = good;
  j["agent_config"].erase("discount");
  EXPECT_THROW(parse_checkpoint(j.dump()), ParseError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), IoError);
}

}  // namespace
}  // namespace acmptc
