#include "acmptc/sim_engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "acmptc/error.hpp"
#include "acmptc/mptcp_core.hpp"

namespace acmptc {

namespace {

constexpr double kMinRttMs = 1.0;
constexpr std::uint64_t kExogenousStream = 1;
constexpr std::uint64_t kPolicyStream = 2;
constexpr std::uint64_t kTrainingStream = 3;

double path_rtt_s(const PathState& p) { return std::max(p.rtt_ms, kMinRttMs) / 1000.0; }

// Largest b' <= b with usage + b' <= cap in floating point.
double fit_within(double b, double usage, double cap) {
  b = std::max(0.0, std::min(b, cap - usage));
  while (b > 0.0 && usage + b > cap) b = std::nextafter(b, 0.0);
  return b;
}

double initial_cwnd(double rate_mbps, const PathState& p) { return std::max(1.0, rate_mbps * path_rtt_s(p)); }

bool contains(const std::vector<int>& ids, int id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); }

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
};

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::tcp: return "tcp";
    case SchedulerKind::mptcp: return "mptcp";
    case SchedulerKind::acmptc: return "acmptc";
    case SchedulerKind::acmptc_drl: return "acmptc_drl";
  }
  return "unknown";
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::custom: return "custom";
    case ScenarioKind::steady: return "steady";
    case ScenarioKind::variable: return "variable";
    case ScenarioKind::extreme: return "extreme";
  }
  return "unknown";
}

SchedulerKind parse_scheduler(std::string_view name) {
  for (SchedulerKind k : {SchedulerKind::tcp, SchedulerKind::mptcp, SchedulerKind::acmptc, SchedulerKind::acmptc_drl}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown scheduler '" + std::string(name) + "' (expected tcp, mptcp, acmptc, acmptc_drl)");
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::custom, ScenarioKind::steady, ScenarioKind::variable, ScenarioKind::extreme}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown scenario kind '" + std::string(name) + "' (expected custom, steady, variable, extreme)");
}

std::vector<StreamSpec> ScenarioConfig::default_streams() {
  return {StreamSpec{0, 10.0, 0.1, 3}, StreamSpec{1, 20.0, 0.1, 3}, StreamSpec{2, 30.0, 0.1, 3}};
}

void ScenarioConfig::validate() const {
  dynamics.validate();
  control.validate();
  agent.validate();
  if (horizon < 1) throw ConfigError("run.horizon: must be >= 1");
  if (streams.empty()) throw ConfigError("streams: at least one stream is required");
  for (std::size_t j = 0; j < streams.size(); ++j) {
    const StreamSpec& s = streams[j];
    const std::string where = "streams[" + std::to_string(j) + "]";
    if (s.stream_id != static_cast<int>(j)) throw ConfigError(where + ".stream_id: ids must be 0..n-1 in order");
    if (!(s.expected_rate_mbps > 0.0) || !std::isfinite(s.expected_rate_mbps)) {
      throw ConfigError(where + ".expected_rate_mbps: must be > 0");
    }
    if (!(s.weight_gamma >= 0.0) || !std::isfinite(s.weight_gamma)) {
      throw ConfigError(where + ".weight_gamma: must be finite and >= 0");
    }
    if (s.max_paths < 1) throw ConfigError(where + ".max_paths: must be >= 1");
  }
  if (!control.target_tau.empty() && control.target_tau.size() != static_cast<std::size_t>(dynamics.n_paths)) {
    throw ConfigError("control.target_tau: needs one entry per path");
  }
}

ScenarioConfig make_scenario(ScenarioKind kind, const ScenarioConfig& base) {
  ScenarioConfig cfg = base;
  cfg.scenario_kind = kind;
  switch (kind) {
    case ScenarioKind::custom: break;
    case ScenarioKind::steady: cfg.dynamics.walk_step_fraction = 0.0; break;
    case ScenarioKind::variable: cfg.dynamics.walk_step_fraction = 0.1; break;
    case ScenarioKind::extreme:
      cfg.dynamics.walk_step_fraction = 0.3;
      cfg.dynamics.loss_range.max = 0.05;
      cfg.dynamics.loss_range.min = std::min(cfg.dynamics.loss_range.min, cfg.dynamics.loss_range.max);
      cfg.dynamics.bandwidth_range.min = 0.1 * base.dynamics.bandwidth_range.min;
      break;
  }
  return cfg;
}

ScenarioConfig resolve_scenario(const ScenarioConfig& cfg) {
  ScenarioConfig out = make_scenario(cfg.scenario_kind, cfg);
  out.scenario_kind = ScenarioKind::custom;
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

namespace {

StreamSummary summarize_subset(int stream_id, std::span<const MetricsRecord> records, bool all) {
  StreamSummary s;
  s.stream_id = stream_id;
  std::vector<double> latencies;
  double sum_lat = 0.0, sum_loss = 0.0, sum_qos = 0.0, sum_util = 0.0;
  s.min_throughput_mbps = std::numeric_limits<double>::infinity();
  s.max_throughput_mbps = -std::numeric_limits<double>::infinity();
  for (const MetricsRecord& r : records) {
    if (!all && r.stream_id != stream_id) continue;
    ++s.samples;
    s.cumulative_throughput += r.delivered_mbps;
    s.min_throughput_mbps = std::min(s.min_throughput_mbps, r.delivered_mbps);
    s.max_throughput_mbps = std::max(s.max_throughput_mbps, r.delivered_mbps);
    sum_lat += r.latency_ms;
    sum_loss += r.loss_rate;
    sum_qos += r.qos;
    sum_util += r.utility;
    latencies.push_back(r.latency_ms);
  }
  if (s.samples == 0) return s;
  const double n = static_cast<double>(s.samples);
  s.mean_throughput_mbps = s.cumulative_throughput / n;
  s.mean_latency_ms = sum_lat / n;
  s.p95_latency_ms = nearest_rank_percentile(std::move(latencies), 0.95);
  s.mean_loss = sum_loss / n;
  s.mean_qos = sum_qos / n;
  s.mean_utility = sum_util / n;
  return s;
}

}  // namespace

Summary summarize(std::span<const MetricsRecord> records) {
  if (records.empty()) throw InputError("summarize: no records");
  Summary out;
  out.aggregate = summarize_subset(-1, records, true);
  std::vector<int> ids;
  for (const MetricsRecord& r : records) ids.push_back(r.stream_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) out.streams.push_back(summarize_subset(id, records, false));
  return out;
}

// ---------------------------------------------------------------------------
// EpisodeRunner

struct EpisodeRunner::Impl {
  ScenarioConfig cfg;
  std::uint64_t seed = 0;
  Rng exogenous;
  NetworkState net;
  std::vector<TraceRecord> trace;
  std::vector<StreamTraceRecord> stream_trace;
  std::vector<double> background;
  std::vector<StreamState> streams;
  std::vector<int> pinned;
  std::vector<double> demands;
  std::size_t stream_cursor = 0;
  std::int64_t steps_done = 0;
  std::vector<MetricsRecord> records;
  std::vector<double> rewards;

  Fnv1a checksum;
  std::size_t violations = 0;
  std::size_t bandwidth_cap_violations = 0;
  double max_utilization = 0.0;
  double min_cwnd = std::numeric_limits<double>::infinity();
  std::size_t reallocations = 0;

  Impl(const ScenarioConfig& c, std::uint64_t s) : cfg(c), seed(s), exogenous(mix_seed(s, kExogenousStream)) {
    cfg.validate();
    if (cfg.trace_path) trace = load_trace_file(*cfg.trace_path);
    if (cfg.stream_trace_path) stream_trace = load_stream_trace_file(*cfg.stream_trace_path);
    net = init_network(cfg.dynamics, exogenous);
    if (!trace.empty()) net = trace_overwrite(net, trace_records_at(trace, 0));
    sample_background();
    record_exogenous();

    const std::size_t m = cfg.streams.size();
    streams.resize(m);
    rewards.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      streams[j].rate_ewma_mbps = cfg.streams[j].expected_rate_mbps;
      demands.push_back(cfg.streams[j].expected_rate_mbps);
    }
    if (cfg.scheduler == SchedulerKind::tcp) pinned.assign(m, mptcp::tcp_pinned_path(net));
  }

  std::size_t n_paths() const { return net.paths.size(); }

  void sample_background() {
    background.resize(n_paths());
    for (double& b : background) {
      b = exogenous.uniform(cfg.dynamics.background_traffic_range.min, cfg.dynamics.background_traffic_range.max);
    }
  }

  void record_exogenous() {
    for (std::size_t i = 0; i < n_paths(); ++i) {
      checksum.add(net.paths[i].bandwidth_mbps);
      checksum.add(net.paths[i].latency_ms);
      checksum.add(net.paths[i].base_loss_rate);
      checksum.add(background[i]);
    }
  }

  void evolve() {
    if (!trace.empty()) {
      net = trace_step(net, trace_records_at(trace, net.t + 1));
    } else {
      net = step_dynamics(net, cfg.dynamics, exogenous);
    }
    sample_background();
    record_exogenous();
  }

  // Applies stream-trace bitrate changes up to the current step.
  void advance_demands() {
    while (stream_cursor < stream_trace.size() && stream_trace[stream_cursor].t <= net.t) {
      const StreamTraceRecord& r = stream_trace[stream_cursor++];
      if (static_cast<std::size_t>(r.stream_id) >= demands.size()) {
        throw InputError("stream trace names unknown stream_id " + std::to_string(r.stream_id));
      }
      demands[static_cast<std::size_t>(r.stream_id)] = r.bitrate_mbps;
    }
  }

  bool is_acmptc() const {
    return cfg.scheduler == SchedulerKind::acmptc || cfg.scheduler == SchedulerKind::acmptc_drl;
  }

  // Per-stream, per-path allocation decided by the ACMPTC laws.
  std::vector<std::vector<double>> plan_acmptc(std::span<const ActionSpec> actions, std::span<const double> demands) {
    const std::size_t n = n_paths();
    const std::size_t m = streams.size();
    const ControlParams& p = cfg.control;
    std::vector<std::vector<char>> fresh(m, std::vector<char>(n, 0));

    // Path assignment: selection on entry, then congestion -> delay -> loss.
    for (std::size_t j = 0; j < m; ++j) {
      StreamState& st = streams[j];
      const StreamSpec& spec = cfg.streams[j];
      if (steps_done == 0 || st.assigned_paths.empty()) {
        st.assigned_paths = select_paths(spec, net, p);
      } else {
        std::vector<int> next;
        for (int current : st.assigned_paths) {
          int path = current;
          for (auto rule : {&reallocate_on_congestion, &reallocate_on_delay, &reallocate_on_loss}) {
            const Reallocation r = rule(path, net, p);
            if (r.moved(path)) {
              path = r.path;
              ++reallocations;
            }
          }
          next.push_back(path);
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        st.assigned_paths = std::move(next);
      }
      if (!actions.empty()) force_primary(st, spec, actions[j].primary_path);

      for (auto it = st.cwnd_mbit.begin(); it != st.cwnd_mbit.end();) {
        it = contains(st.assigned_paths, it->first) ? std::next(it) : st.cwnd_mbit.erase(it);
      }
      const double per_path = demands[j] / static_cast<double>(st.assigned_paths.size());
      for (int i : st.assigned_paths) {
        if (!st.cwnd_mbit.contains(i)) {
          st.cwnd_mbit[i] = initial_cwnd(per_path, net.path(i));
          fresh[j][static_cast<std::size_t>(i)] = 1;
        }
      }
    }

    // Deviation pressure on each path from every stream using it.
    std::vector<double> deviation_sum(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (int i : streams[j].assigned_paths) {
        deviation_sum[static_cast<std::size_t>(i)] += cfg.streams[j].weight_gamma * streams[j].deviation;
      }
    }

    // cwnd laws: piecewise loss law, then rate tracking, then the agent's nudge.
    for (std::size_t j = 0; j < m; ++j) {
      StreamState& st = streams[j];
      for (int i : st.assigned_paths) {
        double& cwnd = st.cwnd_mbit[i];
        if (!fresh[j][static_cast<std::size_t>(i)]) {
          cwnd = update_cwnd(cwnd, net.path(i).loss_rate, deviation_sum[static_cast<std::size_t>(i)], p);
          cwnd = adjust_cwnd_rate(cwnd, st.actual_rate_mbps, demands[j], p);
        }
        if (!actions.empty()) cwnd = std::max(1.0, cwnd * nudge_factor(actions[j].cwnd_adjust));
        min_cwnd = std::min(min_cwnd, cwnd);
      }
    }

    // Requests: the stream's desired rate split across its paths by window rate.
    std::vector<double> desired(m);
    std::vector<std::vector<double>> request(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
      desired[j] = demands[j] * (actions.empty() ? 1.0 : nudge_factor(actions[j].bw_adjust));
      double total_rate = 0.0;
      for (int i : streams[j].assigned_paths) total_rate += streams[j].cwnd_mbit[i] / path_rtt_s(net.path(i));
      for (int i : streams[j].assigned_paths) {
        const double rate = streams[j].cwnd_mbit[i] / path_rtt_s(net.path(i));
        request[j][static_cast<std::size_t>(i)] = std::min(rate, desired[j] * rate / total_rate);
      }
    }

    // Path sharing of the headroom left by background traffic.
    std::vector<std::vector<double>> share(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> users;
      std::vector<double> demand_on_path;
      for (std::size_t j = 0; j < m; ++j) {
        if (contains(streams[j].assigned_paths, static_cast<int>(i))) {
          users.push_back(j);
          demand_on_path.push_back(request[j][i]);
        }
      }
      if (users.empty()) continue;
      const double headroom = std::max(0.0, net.paths[i].bandwidth_mbps - background[i]);
      const std::vector<double> shares = share_path(demand_on_path, headroom);
      for (std::size_t k = 0; k < users.size(); ++k) share[users[k]][i] = shares[k];
    }

    // Window-limited allocation with sequential usage accounting in stream order.
    std::vector<double> usage(background);
    std::vector<std::vector<double>> alloc(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
      for (int id : streams[j].assigned_paths) {
        const auto i = static_cast<std::size_t>(id);
        const PathState& path = net.paths[i];
        const double window_limited =
            allocate_bandwidth(streams[j].cwnd_mbit[id], path_rtt_s(path), path.bandwidth_mbps, usage[i]);
        const double b = fit_within(std::min(share[j][i], window_limited), usage[i], path.bandwidth_mbps);
        alloc[j][i] = b;
        usage[i] += b;
      }
    }

    // Unmet demand pulls in the path with the most headroom.
    for (std::size_t j = 0; j < m; ++j) {
      StreamState& st = streams[j];
      const double got = std::accumulate(alloc[j].begin(), alloc[j].end(), 0.0);
      const double unmet = desired[j] - got;
      if (unmet <= 1e-9 || st.assigned_paths.size() >= static_cast<std::size_t>(cfg.streams[j].max_paths)) continue;
      std::vector<double> headroom(n);
      for (std::size_t i = 0; i < n; ++i) headroom[i] = std::max(0.0, net.paths[i].bandwidth_mbps - usage[i]);
      const HeadroomChoice choice = reallocate_bandwidth(headroom);
      if (choice.saturated || contains(st.assigned_paths, choice.path)) continue;
      const auto i = static_cast<std::size_t>(choice.path);
      const PathState& path = net.paths[i];
      st.assigned_paths.push_back(choice.path);
      std::sort(st.assigned_paths.begin(), st.assigned_paths.end());
      st.cwnd_mbit[choice.path] = initial_cwnd(unmet, path);
      min_cwnd = std::min(min_cwnd, st.cwnd_mbit[choice.path]);
      const double window_limited =
          allocate_bandwidth(st.cwnd_mbit[choice.path], path_rtt_s(path), path.bandwidth_mbps, usage[i]);
      const double b = fit_within(std::min(unmet, window_limited), usage[i], path.bandwidth_mbps);
      alloc[j][i] = b;
      usage[i] += b;
      ++reallocations;
    }
    return alloc;
  }

  void force_primary(StreamState& st, const StreamSpec& spec, int primary) {
    if (primary < 0 || static_cast<std::size_t>(primary) >= n_paths()) {
      throw InputError("action primary path " + std::to_string(primary) + " outside the network");
    }
    if (contains(st.assigned_paths, primary)) return;
    if (st.assigned_paths.size() >= static_cast<std::size_t>(spec.max_paths)) {
      // Drop the lowest-scoring member (highest index on ties).
      auto worst = st.assigned_paths.begin();
      for (auto it = st.assigned_paths.begin(); it != st.assigned_paths.end(); ++it) {
        if (score_path(net.path(*it), cfg.control) <= score_path(net.path(*worst), cfg.control)) worst = it;
      }
      st.assigned_paths.erase(worst);
    }
    st.assigned_paths.push_back(primary);
    std::sort(st.assigned_paths.begin(), st.assigned_paths.end());
  }

  void step(std::span<const ActionSpec> actions) {
    if (steps_done >= cfg.horizon) throw InputError("episode already finished");
    const std::size_t n = n_paths();
    const std::size_t m = streams.size();
    if (!actions.empty()) {
      if (!is_acmptc()) throw InputError("actions are only accepted by the acmptc schedulers");
      if (actions.size() != m) throw InputError("one action per stream required");
    }

    advance_demands();

    std::vector<std::vector<double>> alloc(m, std::vector<double>(n, 0.0));
    switch (cfg.scheduler) {
      case SchedulerKind::tcp: {
        const std::vector<double> offered = mptcp::baseline_tcp_schedule(demands, pinned, net);
        for (std::size_t j = 0; j < m; ++j) {
          alloc[j][static_cast<std::size_t>(pinned[j])] = offered[j];
          streams[j].assigned_paths = {pinned[j]};
        }
        break;
      }
      case SchedulerKind::mptcp: {
        alloc = mptcp::baseline_mptcp_schedule(demands, net);
        for (std::size_t j = 0; j < m; ++j) {
          streams[j].assigned_paths.clear();
          for (std::size_t i = 0; i < n; ++i) {
            if (alloc[j][i] > 0.0) streams[j].assigned_paths.push_back(static_cast<int>(i));
          }
          if (streams[j].assigned_paths.empty()) {
            streams[j].assigned_paths.resize(n);
            std::iota(streams[j].assigned_paths.begin(), streams[j].assigned_paths.end(), 0);
          }
        }
        break;
      }
      case SchedulerKind::acmptc:
      case SchedulerKind::acmptc_drl: alloc = plan_acmptc(actions, demands); break;
    }

    std::vector<double> offered(background);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) offered[i] += alloc[j][i];
    }
    const LoadOutcome outcome = apply_load(net, offered);
    std::vector<double> carried(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      carried[i] = offered[i] > 0.0 ? outcome.delivered_mbps[i] / offered[i] : 0.0;
    }

    const ControlParams& p = cfg.control;
    std::vector<StreamSnapshot> snapshots;
    snapshots.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      StreamState& st = streams[j];
      double sent = 0.0, delivered = 0.0, weighted_latency = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = alloc[j][i] * carried[i];
        sent += alloc[j][i];
        delivered += d;
        weighted_latency += d * net.paths[i].latency_ms;
      }
      double mean_latency = 0.0, mean_loss = 0.0, tau = 0.0;
      for (int i : st.assigned_paths) {
        mean_latency += net.path(i).latency_ms;
        mean_loss += outcome.effective_loss[static_cast<std::size_t>(i)];
        tau += p.tau_for(i);
      }
      const double k = static_cast<double>(st.assigned_paths.size());
      mean_latency /= k;
      mean_loss /= k;
      tau /= k;

      StreamMetrics metrics;
      metrics.delivered_mbps = delivered;
      metrics.expected_mbps = demands[j];
      metrics.latency_ms = delivered > 0.0 ? weighted_latency / delivered : mean_latency;
      metrics.loss_rate = sent > 0.0 ? std::clamp(1.0 - delivered / sent, 0.0, 1.0) : mean_loss;

      const double qos = qos_score(metrics, p);
      const double util = utility(normalize_metrics(metrics, qos, p), p);
      const double experience =
          experience_score(metrics.delivered_mbps, metrics.expected_mbps, metrics.latency_ms, metrics.loss_rate, p);

      st.deviation = traffic_deviation(delivered, st.rate_ewma_mbps);
      st.rate_ewma_mbps += p.deviation_ewma * (delivered - st.rate_ewma_mbps);
      st.actual_rate_mbps = delivered;
      st.experience = experience;
      st.qos = qos;
      st.feedback = feedback_metric(p.eta, tau, experience);
      st.used_bw_mbps.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (alloc[j][i] > 0.0) st.used_bw_mbps[static_cast<int>(i)] = alloc[j][i];
      }
      rewards[j] = util;

      MetricsRecord rec;
      rec.t = net.t;
      rec.stream_id = cfg.streams[j].stream_id;
      rec.delivered_mbps = delivered;
      rec.latency_ms = metrics.latency_ms;
      rec.loss_rate = metrics.loss_rate;
      rec.qos = qos;
      rec.utility = util;
      rec.assigned_paths = st.assigned_paths;
      rec.allocated_mbps = sent;
      rec.demand_mbps = demands[j];
      records.push_back(std::move(rec));

      snapshots.push_back({cfg.streams[j], st.assigned_paths, alloc[j], metrics.latency_ms, metrics.loss_rate, qos});
    }

    const auto found = check_constraints(snapshots, net, p, ConstraintOptions{false});
    violations += found.size();
    for (const Violation& v : found) {
      if (v.kind == ViolationKind::bandwidth_cap) ++bandwidth_cap_violations;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) total += alloc[j][i];
      if (net.paths[i].capacity_mbps > 0.0) {
        max_utilization = std::max(max_utilization, total / net.paths[i].capacity_mbps);
      }
    }

    net = outcome.state;
    ++steps_done;
    if (steps_done < cfg.horizon) evolve();
  }
};

EpisodeRunner::EpisodeRunner(const ScenarioConfig& cfg, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(cfg, seed)) {}
EpisodeRunner::~EpisodeRunner() = default;
EpisodeRunner::EpisodeRunner(EpisodeRunner&&) noexcept = default;
EpisodeRunner& EpisodeRunner::operator=(EpisodeRunner&&) noexcept = default;

bool EpisodeRunner::done() const { return impl_->steps_done >= impl_->cfg.horizon; }
std::int64_t EpisodeRunner::step_index() const { return impl_->steps_done; }
const NetworkState& EpisodeRunner::network() const { return impl_->net; }
std::size_t EpisodeRunner::stream_count() const { return impl_->streams.size(); }

Observation EpisodeRunner::observation(std::size_t stream) const {
  const StreamState& st = impl_->streams.at(stream);
  return encode_observation(impl_->net, st.feedback, st.experience);
}

void EpisodeRunner::step(std::span<const ActionSpec> actions) { impl_->step(actions); }
const std::vector<double>& EpisodeRunner::last_rewards() const { return impl_->rewards; }
const std::vector<MetricsRecord>& EpisodeRunner::records() const { return impl_->records; }

EpisodeResult EpisodeRunner::finish() {
  Impl& s = *impl_;
  EpisodeResult r;
  r.seed = s.seed;
  r.scheduler = s.cfg.scheduler;
  if (!s.records.empty()) r.summary = summarize(s.records);
  r.records = std::move(s.records);
  r.violations = s.violations;
  r.bandwidth_cap_violations = s.bandwidth_cap_violations;
  r.max_path_utilization = s.max_utilization;
  r.min_cwnd_mbit = std::isfinite(s.min_cwnd) ? s.min_cwnd : 0.0;
  r.reallocations = s.reallocations;
  r.exogenous_checksum = s.checksum.h;
  s.records.clear();
  return r;
}

EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, std::span<const Agent> agents,
                          ActionMode mode) {
  const ScenarioConfig resolved = resolve_scenario(cfg);
  resolved.validate();
  const bool drl = resolved.scheduler == SchedulerKind::acmptc_drl;
  if (drl && agents.size() != resolved.streams.size()) {
    throw InputError("acmptc_drl needs one trained agent per stream (" + std::to_string(resolved.streams.size()) +
                     "), got " + std::to_string(agents.size()));
  }
  EpisodeRunner runner(resolved, seed);
  Rng policy_rng(mix_seed(seed, kPolicyStream));
  std::vector<ActionSpec> actions;
  const std::size_t n_paths = runner.network().paths.size();
  while (!runner.done()) {
    if (drl) {
      actions.clear();
      for (std::size_t j = 0; j < agents.size(); ++j) {
        const std::vector<double> probs = policy(agents[j].actor, runner.observation(j));
        const int a = mode == ActionMode::greedy ? greedy_action(probs) : sample_action(probs, 0.0, policy_rng);
        actions.push_back(decode_action(a, n_paths));
      }
    }
    runner.step(actions);
  }
  return runner.finish();
}

// ---------------------------------------------------------------------------
// SimEnv

SimEnv::SimEnv(ScenarioConfig cfg) : cfg_(resolve_scenario(cfg)) {
  cfg_.scheduler = SchedulerKind::acmptc_drl;
  cfg_.horizon = cfg_.agent.horizon;
  cfg_.validate();
}

std::size_t SimEnv::agent_count() const { return cfg_.streams.size(); }
std::size_t SimEnv::observation_dim() const {
  return observation_size(static_cast<std::size_t>(cfg_.dynamics.n_paths));
}
std::size_t SimEnv::action_dim() const { return action_count(static_cast<std::size_t>(cfg_.dynamics.n_paths)); }

std::vector<Observation> SimEnv::reset(std::uint64_t seed) {
  runner_.emplace(cfg_, seed);
  std::vector<Observation> obs;
  for (std::size_t j = 0; j < agent_count(); ++j) obs.push_back(runner_->observation(j));
  return obs;
}

MultiAgentEnv::Step SimEnv::step(std::span<const int> actions) {
  if (!runner_) throw InputError("SimEnv::step before reset");
  std::vector<ActionSpec> decoded;
  decoded.reserve(actions.size());
  const auto n_paths = static_cast<std::size_t>(cfg_.dynamics.n_paths);
  for (int a : actions) decoded.push_back(decode_action(a, n_paths));
  runner_->step(decoded);
  Step out;
  for (std::size_t j = 0; j < agent_count(); ++j) out.observations.push_back(runner_->observation(j));
  out.rewards = runner_->last_rewards();
  out.terminal = runner_->done();
  return out;
}

TrainingResult train_agents(const ScenarioConfig& cfg, std::uint64_t seed) {
  SimEnv env(cfg);
  Rng rng(mix_seed(seed, kTrainingStream));
  std::vector<Agent> agents = make_agents(env, cfg.agent, rng);
  return train(env, std::move(agents), cfg.agent, rng);
}

// ---------------------------------------------------------------------------
// Comparison

double sign_test_p_value(std::span<const double> differences) {
  std::size_t n = 0;
  std::size_t wins = 0;
  for (double d : differences) {
    if (d == 0.0) continue;
    ++n;
    if (d > 0.0) ++wins;
  }
  if (n == 0) return 1.0;
  // Sum of C(n, k) / 2^n for k >= wins, in log space so large n stays finite.
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                            std::lgamma(static_cast<double>(n - k) + 1.0) - static_cast<double>(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(1.0, p);
}

ComparisonReport run_comparison(const ScenarioConfig& cfg, std::span<const SchedulerKind> schedulers,
                                std::span<const std::uint64_t> seeds, const ComparisonOptions& options) {
  if (schedulers.empty()) throw InputError("run_comparison: no schedulers");
  if (seeds.empty()) throw InputError("run_comparison: no seeds");
  ComparisonReport report;
  report.seeds.assign(seeds.begin(), seeds.end());

  std::vector<Agent> trained;
  std::span<const Agent> agents = options.agents;
  const bool needs_agents =
      std::find(schedulers.begin(), schedulers.end(), SchedulerKind::acmptc_drl) != schedulers.end();
  if (needs_agents && agents.empty()) {
    report.training = train_agents(cfg, options.training_seed);
    trained = report.training->agents;
    agents = trained;
  }

  for (SchedulerKind kind : schedulers) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.scheduler = kind;
    SchedulerColumn column;
    column.scheduler = kind;
    for (std::uint64_t seed : seeds) {
      column.runs.push_back(run_episode(run_cfg, seed, kind == SchedulerKind::acmptc_drl ? agents : std::span<const Agent>{}));
    }
    const double k = static_cast<double>(column.runs.size());
    StreamSummary& mean = column.mean;
    mean.stream_id = -1;
    std::size_t horizon = 0;
    for (const EpisodeResult& r : column.runs) {
      const StreamSummary& a = r.summary.aggregate;
      mean.samples += a.samples;
      mean.mean_throughput_mbps += a.mean_throughput_mbps / k;
      mean.min_throughput_mbps += a.min_throughput_mbps / k;
      mean.max_throughput_mbps += a.max_throughput_mbps / k;
      mean.cumulative_throughput += a.cumulative_throughput / k;
      mean.mean_latency_ms += a.mean_latency_ms / k;
      mean.p95_latency_ms += a.p95_latency_ms / k;
      mean.mean_loss += a.mean_loss / k;
      mean.mean_qos += a.mean_qos / k;
      mean.mean_utility += a.mean_utility / k;
      horizon = std::max<std::size_t>(horizon, r.records.empty() ? 0 : static_cast<std::size_t>(r.records.back().t + 1));
    }
    column.throughput_series.assign(horizon, 0.0);
    for (const EpisodeResult& r : column.runs) {
      for (const MetricsRecord& rec : r.records) {
        column.throughput_series[static_cast<std::size_t>(rec.t)] += rec.delivered_mbps / k;
      }
    }
    report.columns.push_back(std::move(column));
  }

  const SchedulerColumn& base = report.columns.front();
  for (std::size_t c = 1; c < report.columns.size(); ++c) {
    const SchedulerColumn& col = report.columns[c];
    PairedDifference diff;
    diff.scheduler = col.scheduler;
    diff.baseline = base.scheduler;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      diff.throughput.push_back(col.runs[s].summary.aggregate.mean_throughput_mbps -
                                base.runs[s].summary.aggregate.mean_throughput_mbps);
      diff.utility.push_back(col.runs[s].summary.aggregate.mean_utility -
                             base.runs[s].summary.aggregate.mean_utility);
    }
    const double k = static_cast<double>(seeds.size());
    diff.mean_throughput = std::accumulate(diff.throughput.begin(), diff.throughput.end(), 0.0) / k;
    diff.mean_utility = std::accumulate(diff.utility.begin(), diff.utility.end(), 0.0) / k;
    diff.throughput_wins = static_cast<std::size_t>(
        std::count_if(diff.throughput.begin(), diff.throughput.end(), [](double d) { return d > 0.0; }));
    diff.utility_wins = static_cast<std::size_t>(
        std::count_if(diff.utility.begin(), diff.utility.end(), [](double d) { return d > 0.0; }));
    diff.throughput_p_value = sign_test_p_value(diff.throughput);
    diff.utility_p_value = sign_test_p_value(diff.utility);
    report.differences.push_back(std::move(diff));
  }
  return report;
}

}  // namespace acmptc
