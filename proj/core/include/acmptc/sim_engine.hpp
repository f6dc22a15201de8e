#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acmptc/control.hpp"
#include "acmptc/drl.hpp"
#include "acmptc/net_model.hpp"
#include "acmptc/stream.hpp"

namespace acmptc {

enum class SchedulerKind { tcp, mptcp, acmptc, acmptc_drl };
/// `custom` runs the dynamics exactly as configured; the others rewrite them via make_scenario.
enum class ScenarioKind { custom, steady, variable, extreme };

std::string_view to_string(SchedulerKind kind);
std::string_view to_string(ScenarioKind kind);
/// Throws ConfigError for an unknown name.
SchedulerKind parse_scheduler(std::string_view name);
ScenarioKind parse_scenario_kind(std::string_view name);

struct ScenarioConfig {
  DynamicsConfig dynamics;
  std::vector<StreamSpec> streams = default_streams();
  ControlParams control;
  AgentConfig agent;
  int horizon = 1000;
  SchedulerKind scheduler = SchedulerKind::acmptc;
  std::optional<std::string> trace_path;
  std::optional<std::string> stream_trace_path;
  ScenarioKind scenario_kind = ScenarioKind::custom;

  static std::vector<StreamSpec> default_streams();

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// steady: no walk; variable: 10 % walk; extreme: 30 % walk, loss up to 5 % and
/// bandwidth floor at 10 % of the base floor.
ScenarioConfig make_scenario(ScenarioKind kind, const ScenarioConfig& base);

/// Applies make_scenario for the configured kind and marks the result `custom`.
ScenarioConfig resolve_scenario(const ScenarioConfig& cfg);

struct StreamTraceRecord {
  std::int64_t t = 0;
  int stream_id = 0;
  double bitrate_mbps = 0.0;

  friend bool operator==(const StreamTraceRecord&, const StreamTraceRecord&) = default;
};

/// CSV header: t,stream_id,bitrate_mbps. Sorted by (t, stream_id) on return.
std::vector<StreamTraceRecord> load_stream_trace(std::istream& source);
std::vector<StreamTraceRecord> load_stream_trace_file(const std::string& path);

struct MetricsRecord {
  std::int64_t t = 0;
  int stream_id = 0;
  double delivered_mbps = 0.0;
  double latency_ms = 0.0;
  double loss_rate = 0.0;
  double qos = 0.0;
  double utility = 0.0;
  std::vector<int> assigned_paths;
  double allocated_mbps = 0.0;
  double demand_mbps = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct StreamSummary {
  /// -1 for the aggregate over all streams.
  int stream_id = -1;
  std::size_t samples = 0;
  double mean_throughput_mbps = 0.0;
  double min_throughput_mbps = 0.0;
  double max_throughput_mbps = 0.0;
  double cumulative_throughput = 0.0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  double mean_loss = 0.0;
  double mean_qos = 0.0;
  double mean_utility = 0.0;
};

struct Summary {
  StreamSummary aggregate;
  std::vector<StreamSummary> streams;
};

/// Nearest-rank percentile (q in (0, 1]) of an unsorted sample.
double nearest_rank_percentile(std::vector<double> values, double q);

/// Throws InputError on empty input.
Summary summarize(std::span<const MetricsRecord> records);

struct EpisodeResult {
  std::uint64_t seed = 0;
  SchedulerKind scheduler = SchedulerKind::acmptc;
  std::vector<MetricsRecord> records;
  Summary summary;
  /// Bandwidth-cap, latency, loss and QoS violations over all steps.
  std::size_t violations = 0;
  std::size_t bandwidth_cap_violations = 0;
  /// Largest per-path (sum of stream allocations) / capacity seen.
  double max_path_utilization = 0.0;
  /// Smallest congestion window held by any stream (ACMPTC schedulers only).
  double min_cwnd_mbit = 0.0;
  std::size_t reallocations = 0;
  /// Hash of every exogenous draw (dynamics and background), equal across schedulers.
  std::uint64_t exogenous_checksum = 0;
};

/// One episode in progress. The DRL environment and run_episode both drive it.
class EpisodeRunner {
 public:
  /// `cfg` must already be resolved (see resolve_scenario).
  EpisodeRunner(const ScenarioConfig& cfg, std::uint64_t seed);
  ~EpisodeRunner();
  EpisodeRunner(EpisodeRunner&&) noexcept;
  EpisodeRunner& operator=(EpisodeRunner&&) noexcept;

  bool done() const;
  std::int64_t step_index() const;
  const NetworkState& network() const;
  std::size_t stream_count() const;

  /// Observation agent `stream` sees before the next step.
  Observation observation(std::size_t stream) const;

  /// Plans, applies load, measures and records one step. `actions` (one per
  /// stream) steer the ACMPTC laws and are only valid for acmptc schedulers.
  void step(std::span<const ActionSpec> actions = {});

  /// Per-stream utility of the last step.
  const std::vector<double>& last_rewards() const;

  const std::vector<MetricsRecord>& records() const;

  /// Summarizes and returns the episode. The runner is left empty.
  EpisodeResult finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class ActionMode { greedy, sample };

/// Runs a full episode. acmptc_drl requires one agent per stream.
EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed,
                          std::span<const Agent> agents = {}, ActionMode mode = ActionMode::greedy);

/// Multi-agent environment over the simulator: one agent per stream, reward = utility.
class SimEnv final : public MultiAgentEnv {
 public:
  explicit SimEnv(ScenarioConfig cfg);

  std::size_t agent_count() const override;
  std::size_t observation_dim() const override;
  std::size_t action_dim() const override;
  std::vector<Observation> reset(std::uint64_t seed) override;
  Step step(std::span<const int> actions) override;

 private:
  ScenarioConfig cfg_;
  std::optional<EpisodeRunner> runner_;
};

/// Trains one agent per stream on the scenario for cfg.agent.episodes episodes.
TrainingResult train_agents(const ScenarioConfig& cfg, std::uint64_t seed);

struct SchedulerColumn {
  SchedulerKind scheduler = SchedulerKind::acmptc;
  std::vector<EpisodeResult> runs;
  /// Means over seeds of the aggregate summaries.
  StreamSummary mean;
  /// Mean over seeds of total delivered throughput (all streams) at each step.
  std::vector<double> throughput_series;
};

struct PairedDifference {
  SchedulerKind scheduler = SchedulerKind::acmptc;
  SchedulerKind baseline = SchedulerKind::acmptc;
  std::vector<double> throughput;
  std::vector<double> utility;
  double mean_throughput = 0.0;
  double mean_utility = 0.0;
  /// Seeds where the scheduler beat the baseline, and one-sided sign-test p-values.
  std::size_t throughput_wins = 0;
  std::size_t utility_wins = 0;
  double throughput_p_value = 1.0;
  double utility_p_value = 1.0;
};

/// One-sided sign test of "differences tend to be positive": P[X >= wins] for
/// X ~ Binomial(nonzero, 1/2). Zero differences are dropped; returns 1 when none remain.
double sign_test_p_value(std::span<const double> differences);

struct ComparisonReport {
  std::vector<std::uint64_t> seeds;
  std::vector<SchedulerColumn> columns;
  /// Every column after the first against the first.
  std::vector<PairedDifference> differences;
  /// Training history when acmptc_drl agents were trained for the comparison.
  std::optional<TrainingResult> training;
};

struct ComparisonOptions {
  /// Pre-trained agents for acmptc_drl; trained from `training_seed` when empty.
  std::span<const Agent> agents;
  std::uint64_t training_seed = 0;
};

ComparisonReport run_comparison(const ScenarioConfig& cfg, std::span<const SchedulerKind> schedulers,
                                std::span<const std::uint64_t> seeds, const ComparisonOptions& options = {});

}  // namespace acmptc
