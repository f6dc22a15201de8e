#include "acmptc/control.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "acmptc/error.hpp"

namespace acmptc {

namespace {

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

void require_path(int current, const NetworkState& network) {
  if (current < 0 || static_cast<std::size_t>(current) >= network.paths.size()) {
    throw InputError("path id " + std::to_string(current) + " outside a " +
                     std::to_string(network.paths.size()) + "-path network");
  }
}

// Lowest-index alternative to `current` minimizing `key`; ties go to the lower index.
template <typename Key>
Reallocation move_to_best_alternative(int current, const NetworkState& network, Key key) {
  Reallocation r{current, true, false};
  int best = -1;
  for (std::size_t k = 0; k < network.paths.size(); ++k) {
    const int id = static_cast<int>(k);
    if (id == current) continue;
    if (best < 0 || key(network.paths[k]) < key(network.paths[static_cast<std::size_t>(best)])) best = id;
  }
  if (best < 0) {
    r.no_alternative = true;
    return r;
  }
  r.path = best;
  return r;
}

}  // namespace

void ControlParams::validate() const {
  const double weights[] = {sel_alpha, sel_beta,  sel_gamma, cwnd_inc_alpha, cwnd_dec_beta, rate_delta,
                            util_w_B,  util_w_L,  util_w_P,  util_w_Q,       eta};
  const char* names[] = {"sel_alpha", "sel_beta", "sel_gamma", "cwnd_inc_alpha", "cwnd_dec_beta", "rate_delta",
                         "util_w_B",  "util_w_L", "util_w_P",  "util_w_Q",       "eta"};
  for (std::size_t i = 0; i < std::size(weights); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw ConfigError(std::string("control.") + names[i] + ": must be finite and >= 0");
    }
  }
  for (double tau : target_tau) {
    if (!std::isfinite(tau)) throw ConfigError("control.target_tau: entries must be finite");
  }
  if (!std::isfinite(default_tau)) throw ConfigError("control.default_tau: must be finite");
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("control.") + name + ": must be in [0, 1]");
  };
  unit(C_th, "C_th");
  unit(rho_th, "rho_th");
  unit(QoS_min, "QoS_min");
  if (!(rho_max > 0.0 && rho_max <= 1.0)) throw ConfigError("control.rho_max: must be in (0, 1]");
  if (!(L_max_ms > 0.0) || !std::isfinite(L_max_ms)) throw ConfigError("control.L_max_ms: must be > 0");
  if (!(RTT_th_ms >= 0.0) || !std::isfinite(RTT_th_ms)) throw ConfigError("control.RTT_th_ms: must be >= 0");
  if (!(L_th_ms >= 0.0) || !std::isfinite(L_th_ms)) throw ConfigError("control.L_th_ms: must be >= 0");
  if (!(deviation_ewma > 0.0 && deviation_ewma <= 1.0)) {
    throw ConfigError("control.deviation_ewma: must be in (0, 1]");
  }
}

double score_path(const PathState& path, const ControlParams& p) {
  return p.sel_alpha * path.bandwidth_mbps - p.sel_beta * path.latency_ms - p.sel_gamma * path.loss_rate;
}

std::vector<int> select_paths(const StreamSpec& stream, const NetworkState& network, const ControlParams& p) {
  const std::size_t n = network.paths.size();
  if (n == 0) throw InputError("select_paths: network has no paths");
  if (stream.max_paths < 1) throw InputError("select_paths: max_paths must be >= 1");
  const std::size_t cap = std::min<std::size_t>(static_cast<std::size_t>(stream.max_paths), n);

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = score_path(network.paths[i], p);

  if (n > kExhaustiveSelectionLimit) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    std::vector<int> chosen;
    for (std::size_t k = 0; k < cap && scores[static_cast<std::size_t>(order[k])] > 0.0; ++k) {
      chosen.push_back(order[k]);
    }
    if (chosen.empty()) chosen.push_back(order.front());
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  // Subsets are compared by total score, then as sorted id lists.
  auto ids_of = [n](std::uint32_t mask) {
    std::vector<int> ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) ids.push_back(static_cast<int>(i));
    }
    return ids;
  };
  std::uint32_t best_mask = 0;
  double best_sum = 0.0;
  std::vector<int> best_ids;
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > cap) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sum += scores[i];
    }
    if (best_mask == 0 || sum > best_sum) {
      best_mask = mask;
      best_sum = sum;
      best_ids = ids_of(mask);
    } else if (sum == best_sum) {
      auto ids = ids_of(mask);
      if (ids < best_ids) {
        best_mask = mask;
        best_ids = std::move(ids);
      }
    }
  }
  return best_ids;
}

Reallocation reallocate_on_congestion(int current, const NetworkState& network, const ControlParams& p) {
  require_path(current, network);
  if (network.path(current).congestion <= p.C_th) return {current, false, false};
  return move_to_best_alternative(current, network, [](const PathState& s) { return s.congestion; });
}

Reallocation reallocate_on_delay(int current, const NetworkState& network, const ControlParams& p) {
  require_path(current, network);
  const PathState& cur = network.path(current);
  if (cur.rtt_ms <= p.RTT_th_ms && cur.latency_ms <= p.L_th_ms) return {current, false, false};
  return move_to_best_alternative(current, network,
                                  [](const PathState& s) { return std::pair{s.rtt_ms, s.latency_ms}; });
}

Reallocation reallocate_on_loss(int current, const NetworkState& network, const ControlParams& p) {
  require_path(current, network);
  if (network.path(current).loss_rate <= p.rho_th) return {current, false, false};
  return move_to_best_alternative(current, network, [](const PathState& s) { return s.loss_rate; });
}

HeadroomChoice reallocate_bandwidth(std::span<const double> headroom_mbps) {
  if (headroom_mbps.empty()) throw InputError("reallocate_bandwidth: no paths");
  HeadroomChoice choice;
  for (std::size_t i = 1; i < headroom_mbps.size(); ++i) {
    if (headroom_mbps[i] > headroom_mbps[static_cast<std::size_t>(choice.path)]) choice.path = static_cast<int>(i);
  }
  choice.saturated = !(headroom_mbps[static_cast<std::size_t>(choice.path)] > 0.0);
  return choice;
}

double update_cwnd(double cwnd, double path_loss, double deviation_sum, const ControlParams& p) {
  double next;
  if (path_loss < p.rho_th) {
    next = cwnd + p.cwnd_inc_alpha * (1.0 - path_loss - deviation_sum);
  } else {
    const double zeta = path_loss + deviation_sum;
    next = std::max(cwnd - p.cwnd_dec_beta * cwnd * zeta, 1.0);
  }
  return std::max(next, 1.0);
}

double adjust_cwnd_rate(double cwnd, double actual_rate, double expected_rate, const ControlParams& p) {
  if (expected_rate == 0.0) throw DomainError("adjust_cwnd_rate: expected rate must be non-zero");
  return std::max(cwnd + p.rate_delta * (actual_rate / expected_rate - 1.0), 1.0);
}

double traffic_deviation(double actual_rate, double rate_ewma) {
  return (actual_rate - rate_ewma) / std::max(rate_ewma, 1.0);
}

double allocate_bandwidth(double cwnd_mbit, double rtt_s, double path_capacity, double others_usage) {
  if (rtt_s == 0.0) throw DomainError("allocate_bandwidth: rtt must be non-zero");
  if (others_usage < 0.0) throw InputError("allocate_bandwidth: usage must be >= 0");
  return std::max(0.0, std::min(cwnd_mbit / rtt_s, path_capacity - others_usage));
}

std::vector<double> share_path(std::span<const double> demands_mbps, double headroom_mbps) {
  if (demands_mbps.empty()) throw InputError("share_path: no streams on path");
  std::vector<double> shares(demands_mbps.size(), 0.0);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < demands_mbps.size(); ++j) {
    if (demands_mbps[j] < 0.0) throw InputError("share_path: negative demand");
    if (demands_mbps[j] > 0.0) active.push_back(j);
  }
  double remaining = std::max(0.0, headroom_mbps);
  while (!active.empty() && remaining > 0.0) {
    double weight = 0.0;
    for (std::size_t j : active) weight += demands_mbps[j];
    std::vector<std::size_t> capped;
    std::vector<std::size_t> open;
    for (std::size_t j : active) {
      const double offer = remaining * demands_mbps[j] / weight;
      (offer >= demands_mbps[j] - shares[j] ? capped : open).push_back(j);
    }
    if (capped.empty()) {
      double given = 0.0;
      for (std::size_t k = 0; k < open.size(); ++k) {
        const std::size_t j = open[k];
        // The last open stream takes the exact remainder so nothing is over-issued.
        const double offer = k + 1 < open.size() ? remaining * demands_mbps[j] / weight : remaining - given;
        const double increment = std::clamp(offer, 0.0, remaining - given);
        shares[j] += increment;
        given += increment;
      }
      break;
    }
    for (std::size_t j : capped) {
      const double need = std::min(demands_mbps[j] - shares[j], remaining);
      shares[j] += need;
      remaining -= need;
    }
    active = std::move(open);
  }
  return shares;
}

double feedback_metric(double eta, double target, double experience) { return eta * (target - experience); }

double experience_score(double delivered_rate, double expected_rate, double latency_ms, double loss_rate,
                        const ControlParams& p) {
  if (expected_rate == 0.0) throw DomainError("experience_score: expected rate must be non-zero");
  const double rate = clip01(delivered_rate / expected_rate);
  const double latency = std::sqrt(1.0 - std::min(std::max(latency_ms, 0.0) / p.L_max_ms, 1.0));
  const double loss = std::sqrt(1.0 - std::min(std::max(loss_rate, 0.0) / p.rho_max, 1.0));
  return rate * latency * loss;
}

double qos_score(const StreamMetrics& m, const ControlParams& p) {
  const double satisfaction = m.expected_mbps > 0.0 ? clip01(m.delivered_mbps / m.expected_mbps) : 1.0;
  const double latency = 1.0 - clip01(m.latency_ms / p.L_max_ms);
  const double loss = 1.0 - clip01(m.loss_rate / p.rho_max);
  return 0.5 * satisfaction + 0.3 * latency + 0.2 * loss;
}

NormalizedMetrics normalize_metrics(const StreamMetrics& m, double qos, const ControlParams& p) {
  NormalizedMetrics n;
  n.bandwidth = m.expected_mbps > 0.0 ? std::min(std::max(m.delivered_mbps, 0.0) / m.expected_mbps, 1.0) : 1.0;
  n.latency = std::min(std::max(m.latency_ms, 0.0) / p.L_max_ms, 1.0);
  n.loss = std::min(std::max(m.loss_rate, 0.0) / p.rho_max, 1.0);
  n.qos = qos;
  return n;
}

double utility(double bandwidth_norm, double latency_norm, double loss_norm, double qos, const ControlParams& p) {
  return p.util_w_B * bandwidth_norm - p.util_w_L * latency_norm - p.util_w_P * loss_norm + p.util_w_Q * qos;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::bandwidth_cap: return "bandwidth_cap";
    case ViolationKind::latency: return "latency";
    case ViolationKind::loss: return "loss";
    case ViolationKind::qos: return "qos";
    case ViolationKind::path_selection: return "path_selection";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (path_id >= 0) os << " path=" << path_id;
  if (stream_id >= 0) os << " stream=" << stream_id;
  os << " value=" << value << " limit=" << limit << " excess=" << excess();
  return os.str();
}

std::vector<Violation> check_constraints(std::span<const StreamSnapshot> streams, const NetworkState& network,
                                         const ControlParams& p, ConstraintOptions options) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < network.paths.size(); ++i) {
    double total = 0.0;
    for (const StreamSnapshot& s : streams) {
      if (i < s.allocated_mbps.size()) total += s.allocated_mbps[i];
    }
    const double cap = network.paths[i].capacity_mbps;
    if (total > cap) {
      out.push_back({ViolationKind::bandwidth_cap, -1, static_cast<int>(i), total, cap});
    }
  }
  for (const StreamSnapshot& s : streams) {
    const int id = s.spec.stream_id;
    if (s.latency_ms > p.L_max_ms) out.push_back({ViolationKind::latency, id, -1, s.latency_ms, p.L_max_ms});
    if (s.loss_rate > p.rho_max) out.push_back({ViolationKind::loss, id, -1, s.loss_rate, p.rho_max});
    if (s.qos < p.QoS_min) out.push_back({ViolationKind::qos, id, -1, s.qos, p.QoS_min});
    if (options.check_path_selection) {
      std::vector<int> assigned = s.assigned_paths;
      std::sort(assigned.begin(), assigned.end());
      if (assigned != select_paths(s.spec, network, p)) {
        out.push_back({ViolationKind::path_selection, id, -1, static_cast<double>(assigned.size()), 0.0});
      }
    }
  }
  return out;
}

}  // namespace acmptc
