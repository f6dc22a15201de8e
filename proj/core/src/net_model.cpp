#include "acmptc/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acmptc/error.hpp"

namespace acmptc {

namespace {

void check_range(const Range& r, const char* name, double lo, double hi) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max)) {
    throw ConfigError(std::string("dynamics.") + name + ": bounds must be finite");
  }
  if (!r.valid()) {
    throw ConfigError(std::string("dynamics.") + name + ": min > max");
  }
  if (r.min < lo || r.max > hi) {
    throw ConfigError(std::string("dynamics.") + name + ": outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
}

double walk(double value, double step_fraction, double u, const Range& range) {
  // u in [0,1) maps to a relative change in [-step, +step).
  const double factor = 1.0 + step_fraction * (2.0 * u - 1.0);
  return range.clamp(value * factor);
}

}  // namespace

void DynamicsConfig::validate() const {
  if (n_paths < 1) throw ConfigError("dynamics.n_paths: must be >= 1");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  check_range(bandwidth_range, "bandwidth_range", 0.0, kInf);
  check_range(latency_range, "latency_range", 0.0, kInf);
  check_range(loss_range, "loss_range", 0.0, 1.0);
  check_range(background_traffic_range, "background_traffic_range", 0.0, kInf);
  if (!(walk_step_fraction >= 0.0 && walk_step_fraction <= 1.0)) {
    throw ConfigError("dynamics.walk_step_fraction: must be in [0, 1]");
  }
}

std::string path_invariant_violation(const PathState& p) {
  const double fields[] = {p.bandwidth_mbps, p.latency_ms,  p.rtt_ms,       p.loss_rate,
                           p.base_loss_rate, p.congestion, p.capacity_mbps};
  for (double f : fields) {
    if (!std::isfinite(f)) return "non-finite field";
  }
  if (p.loss_rate < 0.0 || p.loss_rate > 1.0) return "loss_rate outside [0,1]";
  if (p.base_loss_rate < 0.0 || p.base_loss_rate > 1.0) return "base_loss_rate outside [0,1]";
  if (p.congestion < 0.0 || p.congestion > 1.0) return "congestion outside [0,1]";
  if (p.bandwidth_mbps < 0.0) return "negative bandwidth";
  if (p.bandwidth_mbps > p.capacity_mbps) return "bandwidth above capacity";
  if (p.latency_ms < 0.0) return "negative latency";
  if (p.rtt_ms < p.latency_ms) return "rtt below latency";
  return {};
}

NetworkState init_network(const DynamicsConfig& config, Rng& rng) {
  config.validate();
  NetworkState state;
  state.t = 0;
  state.paths.reserve(static_cast<std::size_t>(config.n_paths));
  for (int i = 0; i < config.n_paths; ++i) {
    PathState p;
    p.path_id = i;
    p.capacity_mbps = config.bandwidth_range.max;
    p.bandwidth_mbps = rng.uniform(config.bandwidth_range.min, config.bandwidth_range.max);
    p.latency_ms = rng.uniform(config.latency_range.min, config.latency_range.max);
    p.base_loss_rate = rng.uniform(config.loss_range.min, config.loss_range.max);
    // A degenerate range still has to return exactly its endpoint.
    p.bandwidth_mbps = config.bandwidth_range.clamp(p.bandwidth_mbps);
    p.latency_ms = config.latency_range.clamp(p.latency_ms);
    p.base_loss_rate = config.loss_range.clamp(p.base_loss_rate);
    p.loss_rate = p.base_loss_rate;
    p.congestion = 0.0;
    p.rtt_ms = modeled_rtt_ms(p.latency_ms, p.congestion);
    state.paths.push_back(p);
  }
  return state;
}

NetworkState step_dynamics(const NetworkState& state, const DynamicsConfig& config, Rng& rng) {
  NetworkState next = state;
  next.t = state.t + 1;
  const double step = config.walk_step_fraction;
  for (PathState& p : next.paths) {
    const double ub = rng.uniform01();
    const double ul = rng.uniform01();
    const double ur = rng.uniform01();
    if (step == 0.0) continue;
    const double overflow = std::max(0.0, p.loss_rate - p.base_loss_rate);
    p.bandwidth_mbps = std::min(walk(p.bandwidth_mbps, step, ub, config.bandwidth_range), p.capacity_mbps);
    p.latency_ms = walk(p.latency_ms, step, ul, config.latency_range);
    p.base_loss_rate = walk(p.base_loss_rate, step, ur, config.loss_range);
    // Zero loss would stay at zero under a purely multiplicative walk.
    if (p.base_loss_rate == 0.0 && config.loss_range.max > 0.0) {
      p.base_loss_rate = config.loss_range.clamp(step * ur * config.loss_range.max);
    }
    p.loss_rate = std::clamp(p.base_loss_rate + overflow, 0.0, 1.0);
    p.rtt_ms = modeled_rtt_ms(p.latency_ms, p.congestion);
  }
  return next;
}

LoadOutcome apply_load(const NetworkState& state, std::span<const double> offered) {
  if (offered.size() != state.paths.size()) {
    throw InputError("apply_load: expected " + std::to_string(state.paths.size()) +
                     " offered loads, got " + std::to_string(offered.size()));
  }
  LoadOutcome out;
  out.state = state;
  out.effective_loss.resize(offered.size());
  out.delivered_mbps.resize(offered.size());
  for (std::size_t i = 0; i < offered.size(); ++i) {
    const double load = offered[i];
    if (!(load >= 0.0) || !std::isfinite(load)) {
      throw InputError("apply_load: offered load on path " + std::to_string(i) +
                       " must be finite and >= 0");
    }
    PathState& p = out.state.paths[i];
    p.congestion = p.capacity_mbps > 0.0 ? std::min(1.0, load / p.capacity_mbps) : (load > 0.0 ? 1.0 : 0.0);
    double overflow = 0.0;
    if (load > p.bandwidth_mbps) overflow = (load - p.bandwidth_mbps) / load;
    const double loss = std::clamp(p.base_loss_rate + overflow, 0.0, 1.0);
    p.loss_rate = loss;
    p.rtt_ms = modeled_rtt_ms(p.latency_ms, p.congestion);
    out.effective_loss[i] = loss;
    out.delivered_mbps[i] = std::min(load, p.bandwidth_mbps) * (1.0 - loss);
  }
  return out;
}

}  // namespace acmptc
