#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "acmptc/net_model.hpp"
#include "acmptc/stream.hpp"

namespace acmptc {

/// Weights and thresholds of the ACMPTC control laws.
///
/// The three groups of weights (path score, cwnd law, utility) are kept apart
/// even though they reuse the same Greek letters in the literature.
struct ControlParams {
  // Path score: sel_alpha * B - sel_beta * L - sel_gamma * rho.
  double sel_alpha = 0.7;
  double sel_beta = 0.2;
  double sel_gamma = 0.1;

  // cwnd laws.
  double cwnd_inc_alpha = 1.0;
  double cwnd_dec_beta = 0.5;
  double rate_delta = 1.0;

  // Utility / reward weights.
  double util_w_B = 0.7;
  double util_w_L = 0.2;
  double util_w_P = 0.1;
  double util_w_Q = 0.0;

  // Feedback loop.
  double eta = 0.1;
  /// Per-path experience target; paths without an entry use default_tau.
  std::vector<double> target_tau;
  double default_tau = 0.9;

  // Thresholds.
  double C_th = 0.8;
  double RTT_th_ms = 120.0;
  double L_th_ms = 100.0;
  double rho_th = 0.03;
  double rho_max = 0.05;
  double L_max_ms = 100.0;
  double QoS_min = 0.5;

  /// Smoothing factor of the per-stream rate EWMA behind the deviation statistic.
  double deviation_ewma = 0.2;

  double tau_for(int path_id) const {
    const auto i = static_cast<std::size_t>(path_id);
    return i < target_tau.size() ? target_tau[i] : default_tau;
  }

  void validate() const;

  friend bool operator==(const ControlParams&, const ControlParams&) = default;
};

/// Mutable per-stream control state.
struct StreamState {
  /// Sorted, unique path ids.
  std::vector<int> assigned_paths;
  std::map<int, double> cwnd_mbit;
  std::map<int, double> used_bw_mbps;
  double actual_rate_mbps = 0.0;
  double rate_ewma_mbps = 0.0;
  double deviation = 0.0;
  double experience = 0.0;
  double qos = 0.0;
  double feedback = 0.0;
};

struct FeedbackSignal {
  double value = 0.0;
  int path_id = 0;
};

/// Outcome of one reallocation rule.
struct Reallocation {
  int path = 0;
  /// The rule's threshold was exceeded on the current path.
  bool fired = false;
  /// Fired on a single-path network: nowhere to move.
  bool no_alternative = false;

  bool moved(int current) const { return path != current; }
};

struct HeadroomChoice {
  int path = 0;
  /// Every headroom was zero.
  bool saturated = false;
};

/// Stream-level measurements feeding experience, QoS and utility.
struct StreamMetrics {
  double delivered_mbps = 0.0;
  double expected_mbps = 0.0;
  double latency_ms = 0.0;
  double loss_rate = 0.0;
};

/// Utility inputs after normalization to [0, 1].
struct NormalizedMetrics {
  double bandwidth = 0.0;
  double latency = 0.0;
  double loss = 0.0;
  double qos = 0.0;
};

// Path scoring and selection.

double score_path(const PathState& path, const ControlParams& p);

/// Path set of at most stream.max_paths paths with maximal total score. Exhaustive
/// for up to kExhaustiveSelectionLimit paths, greedy top-k beyond. Never empty.
std::vector<int> select_paths(const StreamSpec& stream, const NetworkState& network, const ControlParams& p);

inline constexpr std::size_t kExhaustiveSelectionLimit = 12;

// Reallocation rules. Each returns `current` unless its threshold fires.

Reallocation reallocate_on_congestion(int current, const NetworkState& network, const ControlParams& p);
Reallocation reallocate_on_delay(int current, const NetworkState& network, const ControlParams& p);
Reallocation reallocate_on_loss(int current, const NetworkState& network, const ControlParams& p);

/// Path with the most headroom (lowest index on ties).
HeadroomChoice reallocate_bandwidth(std::span<const double> headroom_mbps);

// Congestion window.

/// Piecewise loss-driven update, floored at 1 Mbit.
double update_cwnd(double cwnd, double path_loss, double deviation_sum, const ControlParams& p);

/// Rate-tracking correction cwnd + delta * (actual / expected - 1), floored at 1 Mbit.
double adjust_cwnd_rate(double cwnd, double actual_rate, double expected_rate, const ControlParams& p);

/// (actual - ewma) / max(ewma, 1).
double traffic_deviation(double actual_rate, double rate_ewma);

// Bandwidth.

/// min(cwnd / rtt, capacity - others_usage), floored at 0. Mbps.
double allocate_bandwidth(double cwnd_mbit, double rtt_s, double path_capacity, double others_usage);

/// Splits headroom among the streams sharing a path in proportion to their
/// demand, capping each at its demand and redistributing the leftover.
std::vector<double> share_path(std::span<const double> demands_mbps, double headroom_mbps);

// Feedback, experience, QoS and utility.

double feedback_metric(double eta, double target, double experience);

double experience_score(double delivered_rate, double expected_rate, double latency_ms, double loss_rate,
                        const ControlParams& p);

double qos_score(const StreamMetrics& m, const ControlParams& p);

NormalizedMetrics normalize_metrics(const StreamMetrics& m, double qos, const ControlParams& p);

double utility(double bandwidth_norm, double latency_norm, double loss_norm, double qos, const ControlParams& p);

inline double utility(const NormalizedMetrics& n, const ControlParams& p) {
  return utility(n.bandwidth, n.latency, n.loss, n.qos, p);
}

// Constraint diagnostics.

enum class ViolationKind { bandwidth_cap, latency, loss, qos, path_selection };

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::bandwidth_cap;
  /// -1 for path-level violations.
  int stream_id = -1;
  /// -1 for stream-level violations.
  int path_id = -1;
  double value = 0.0;
  double limit = 0.0;

  double excess() const { return value - limit; }
  std::string describe() const;
};

/// One stream's allocation and measured outcome at a single step.
struct StreamSnapshot {
  StreamSpec spec;
  std::vector<int> assigned_paths;
  /// Allocated bandwidth indexed by path id; missing entries count as 0.
  std::vector<double> allocated_mbps;
  double latency_ms = 0.0;
  double loss_rate = 0.0;
  double qos = 0.0;
};

struct ConstraintOptions {
  bool check_path_selection = true;
};

/// Reports every violated constraint: path capacity (sum of allocations), stream
/// latency / loss / QoS bounds and optimal path assignment. Path violations come
/// first in path order, then stream violations in stream order.
std::vector<Violation> check_constraints(std::span<const StreamSnapshot> streams, const NetworkState& network,
                                         const ControlParams& p, ConstraintOptions options = {});

}  // namespace acmptc
