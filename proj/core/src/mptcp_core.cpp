#include "acmptc/mptcp_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acmptc/error.hpp"

namespace acmptc::mptcp {

double subflow_throughput(const SubflowParams& s) {
  if (s.rtt_s == 0.0) throw DomainError("subflow_throughput: rtt_s must be non-zero");
  return (s.window_mbit / s.rtt_s) * (1.0 - s.loss_prob / 2.0);
}

double total_throughput(std::span<const SubflowParams> subflows) {
  double sum = 0.0;
  for (const SubflowParams& s : subflows) sum += subflow_throughput(s);
  return sum;
}

double equilibrium_window(double p, bool exact) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("equilibrium_window: p must lie in (0, 1), got " + std::to_string(p));
  }
  return exact ? std::sqrt(2.0 * (1.0 - p) / p) : std::sqrt(2.0 / p);
}

AllocationResult allocate_load(double total, std::span<const SubflowParams> subflows) {
  if (subflows.empty()) throw InputError("allocate_load: no sub-flows");
  if (!(total >= 0.0)) throw InputError("allocate_load: total must be >= 0");
  std::vector<double> rates;
  rates.reserve(subflows.size());
  double sum = 0.0;
  for (const SubflowParams& s : subflows) {
    const double r = std::max(0.0, subflow_throughput(s));
    rates.push_back(r);
    sum += r;
  }
  if (sum <= 0.0) throw AllocationError("allocate_load: every modeled throughput is zero");

  AllocationResult out;
  out.total = total;
  out.shares.resize(rates.size());
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < rates.size(); ++i) {
    out.shares[i] = total * rates[i] / sum;
    assigned += out.shares[i];
  }
  out.shares.back() = std::max(0.0, total - assigned);
  return out;
}

SubflowParams baseline_subflow(const PathState& path) {
  constexpr double kMaxLoss = 0.999;
  constexpr double kMinRttMs = 1.0;
  SubflowParams s;
  s.rtt_s = std::max(path.rtt_ms, kMinRttMs) / 1000.0;
  s.loss_prob = std::min(path.loss_rate, kMaxLoss);
  s.window_mbit = s.loss_prob > 0.0 ? equilibrium_window(s.loss_prob, true) : 1.0;
  return s;
}

int tcp_pinned_path(const NetworkState& initial) {
  if (initial.paths.empty()) throw InputError("tcp_pinned_path: network has no paths");
  int best = 0;
  for (std::size_t i = 1; i < initial.paths.size(); ++i) {
    if (initial.paths[i].bandwidth_mbps > initial.paths[static_cast<std::size_t>(best)].bandwidth_mbps) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<double> baseline_tcp_schedule(std::span<const double> demands_mbps,
                                          std::span<const int> pinned_paths,
                                          const NetworkState& network) {
  if (demands_mbps.size() != pinned_paths.size()) {
    throw InputError("baseline_tcp_schedule: one pinned path per stream required");
  }
  std::vector<double> offered(demands_mbps.size(), 0.0);
  for (std::size_t j = 0; j < demands_mbps.size(); ++j) {
    const SubflowParams s = baseline_subflow(network.path(pinned_paths[j]));
    const double window_rate = s.rtt_s > 0.0 ? s.window_mbit / s.rtt_s : demands_mbps[j];
    offered[j] = std::min(demands_mbps[j], window_rate);
  }
  return offered;
}

std::vector<std::vector<double>> baseline_mptcp_schedule(std::span<const double> demands_mbps,
                                                         const NetworkState& network) {
  if (network.paths.empty()) throw InputError("baseline_mptcp_schedule: network has no paths");
  std::vector<SubflowParams> subflows;
  subflows.reserve(network.paths.size());
  for (const PathState& p : network.paths) subflows.push_back(baseline_subflow(p));

  std::vector<std::vector<double>> out;
  out.reserve(demands_mbps.size());
  for (double demand : demands_mbps) {
    if (demand <= 0.0) {
      out.emplace_back(network.paths.size(), 0.0);
      continue;
    }
    out.push_back(allocate_load(demand, subflows).shares);
  }
  return out;
}

}  // namespace acmptc::mptcp
