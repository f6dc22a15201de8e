#pragma once

#include <span>
#include <vector>

#include "acmptc/net_model.hpp"

namespace acmptc::mptcp {

/// One MPTCP sub-flow. Window in Mbit so that window / RTT is in Mbps.
struct SubflowParams {
  double window_mbit = 1.0;
  double rtt_s = 0.1;
  double loss_prob = 0.0;
};

struct AllocationResult {
  std::vector<double> shares;
  double total = 0.0;
};

/// (w / RTT) * (1 - p / 2), in Mbps.
double subflow_throughput(const SubflowParams& s);

double total_throughput(std::span<const SubflowParams> subflows);

/// Loss-driven equilibrium window: sqrt(2(1-p)/p), or sqrt(2/p) when `exact` is false.
double equilibrium_window(double p, bool exact = true);

/// Splits `total` across sub-flows in proportion to their modeled throughput.
/// The last share absorbs the rounding remainder so the shares sum to `total`.
AllocationResult allocate_load(double total, std::span<const SubflowParams> subflows);

/// Sub-flow parameters the vanilla MPTCP baseline derives for a path.
/// Loss is capped just below 1, RTT is floored at 1 ms and a lossless path gets
/// the 1 Mbit floor window.
SubflowParams baseline_subflow(const PathState& path);

/// Single-path TCP: every stream is pinned to the highest-bandwidth path of the
/// initial network (lowest index on ties).
int tcp_pinned_path(const NetworkState& initial);

/// Per-stream offered load of the TCP baseline: min(demand, w / RTT) on the pinned path.
std::vector<double> baseline_tcp_schedule(std::span<const double> demands_mbps,
                                          std::span<const int> pinned_paths,
                                          const NetworkState& network);

/// Per-stream, per-path offered load of the vanilla MPTCP baseline.
std::vector<std::vector<double>> baseline_mptcp_schedule(std::span<const double> demands_mbps,
                                                         const NetworkState& network);

}  // namespace acmptc::mptcp
