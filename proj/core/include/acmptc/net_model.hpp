#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "acmptc/random.hpp"

namespace acmptc {

struct Range {
  double min = 0.0;
  double max = 0.0;

  bool valid() const { return min <= max; }
  bool contains(double x) const { return x >= min && x <= max; }
  double clamp(double x) const { return x < min ? min : (x > max ? max : x); }

  friend bool operator==(const Range&, const Range&) = default;
};

/// Time-varying state of one network path.
///
/// `loss_rate` is the loss a sender observes (channel loss plus overflow drops
/// from the last applied load); `base_loss_rate` is the exogenous channel
/// component that the dynamics walk.
struct PathState {
  int path_id = 0;
  double bandwidth_mbps = 0.0;
  double latency_ms = 0.0;
  double rtt_ms = 0.0;
  double loss_rate = 0.0;
  double base_loss_rate = 0.0;
  double congestion = 0.0;
  double capacity_mbps = 0.0;

  friend bool operator==(const PathState&, const PathState&) = default;
};

struct NetworkState {
  std::int64_t t = 0;
  std::vector<PathState> paths;

  std::size_t size() const { return paths.size(); }
  const PathState& path(int id) const { return paths.at(static_cast<std::size_t>(id)); }

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

struct DynamicsConfig {
  int n_paths = 5;
  Range bandwidth_range{10.0, 100.0};
  Range latency_range{10.0, 100.0};
  Range loss_range{0.0, 0.05};
  double walk_step_fraction = 0.1;
  Range background_traffic_range{0.0, 50.0};
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const DynamicsConfig&, const DynamicsConfig&) = default;
};

struct TraceRecord {
  std::int64_t t = 0;
  int path_id = 0;
  double bandwidth_mbps = 0.0;
  double latency_ms = 0.0;
  double loss_rate = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Network after a load was applied, plus what each path actually carried.
struct LoadOutcome {
  NetworkState state;
  std::vector<double> effective_loss;
  std::vector<double> delivered_mbps;
};

/// Returns an empty string when every invariant of `p` holds, otherwise a
/// description of the first violation.
std::string path_invariant_violation(const PathState& p);

/// Samples every path uniformly inside the configured ranges. Capacity is the
/// upper end of the bandwidth range.
NetworkState init_network(const DynamicsConfig& config, Rng& rng);

/// Advances one step with a bounded multiplicative random walk. Always draws
/// exactly three uniforms per path so the draw sequence does not depend on state.
NetworkState step_dynamics(const NetworkState& state, const DynamicsConfig& config, Rng& rng);

/// Maps per-path offered load to congestion, effective loss and delivered rate.
LoadOutcome apply_load(const NetworkState& state, std::span<const double> offered_mbps_per_path);

/// RTT model shared by dynamics, traces and load application.
inline double modeled_rtt_ms(double latency_ms, double congestion) {
  return 2.0 * latency_ms * (1.0 + congestion);
}

// Trace ingestion. CSV header: t,path_id,bandwidth_mbps,latency_ms,loss_rate

std::vector<TraceRecord> load_trace(std::istream& source);
std::vector<TraceRecord> load_trace_file(const std::string& path);

/// Overwrites listed paths, carries the rest forward and increments t.
NetworkState trace_step(const NetworkState& state, std::span<const TraceRecord> records_at_t);

/// Overwrites listed paths without advancing time (used for the t = 0 rows).
NetworkState trace_overwrite(const NetworkState& state, std::span<const TraceRecord> records);

/// Records with the given t from a (t, path_id)-sorted trace.
std::span<const TraceRecord> trace_records_at(std::span<const TraceRecord> sorted, std::int64_t t);

}  // namespace acmptc
