// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "acmptc/control.hpp"
#include "acmptc/drl.hpp"
#include "acmptc/export.hpp"
#include "acmptc/mlp.hpp"
#include "acmptc/mptcp_core.hpp"
#include "acmptc/sim_engine.hpp"
#include "acmptc_cli/cli.hpp"
#include "temp_dir.hpp"
#include "toy_mdp.hpp"

namespace {

using namespace acmptc;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kFormulaTol = 1e-12;
constexpr double kFormulaBudgetS = 1.0;
constexpr int kSelectionNetworks = 1000;
constexpr double kSelectionBudgetS = 10.0;
constexpr int kReallocationDraws = 10000;
constexpr double kGradTol = 1e-4;
constexpr double kGradBudgetS = 30.0;
constexpr int kPolicyDraws = 100000;
constexpr double kPolicySumTol = 1e-9;
constexpr int kConservationSteps = 1000;
constexpr int kToyEpisodes = 500;
constexpr int kToyHorizon = 50;
constexpr int kToySmoothing = 50;
constexpr int kToyProbeStates = 1000;
constexpr double kToyGreedyShare = 0.95;
constexpr double kToyTdRatio = 0.5;
constexpr double kToyBudgetS = 120.0;
constexpr int kCompareSeeds = 20;
constexpr int kCompareEpisodes = 200;
constexpr std::uint64_t kCompareTrainingSeed = 1000;
constexpr double kSignLevel = 0.05;
constexpr double kCompareBudgetS = 300.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Outcome formula_exactness() {
  const auto start = Clock::now();
  struct Check {
    const char* name;
    double got;
    double want;
  };
  ControlParams p;
  p.rho_th = 0.05;
  p.cwnd_inc_alpha = 1.0;
  p.cwnd_dec_beta = 0.5;
  ControlParams floor = p;
  floor.cwnd_dec_beta = 1.0;
  ControlParams rate = p;
  rate.rate_delta = 2.0;
  const std::vector<Check> checks{
      {"subflow_throughput(10,0.1,0.02)", mptcp::subflow_throughput({10, 0.1, 0.02}), 99.0},
      {"subflow_throughput(5,0.05,0)", mptcp::subflow_throughput({5, 0.05, 0.0}), 100.0},
      {"subflow_throughput(20,0.2,0.1)", mptcp::subflow_throughput({20, 0.2, 0.1}), 95.0},
      {"equilibrium_window exact(0.5)", mptcp::equilibrium_window(0.5, true), std::sqrt(2.0)},
      {"equilibrium_window approx(0.5)", mptcp::equilibrium_window(0.5, false), 2.0},
      {"equilibrium_window exact(2/3)", mptcp::equilibrium_window(2.0 / 3.0, true), 1.0},
      {"update_cwnd increase", update_cwnd(10, 0.01, 0, p), 10.99},
      {"update_cwnd decrease", update_cwnd(10, 0.1, 0, p), 9.5},
      {"update_cwnd floor", update_cwnd(1, 1.0, 0, floor), 1.0},
      {"adjust_cwnd_rate unchanged", adjust_cwnd_rate(10, 10, 10, rate), 10.0},
      {"adjust_cwnd_rate 15/10", adjust_cwnd_rate(10, 15, 10, rate), 11.0},
      {"adjust_cwnd_rate floor", adjust_cwnd_rate(1, 0, 10, rate), 1.0},
  };
  double worst = 0.0;
  std::string worst_name = "none";
  for (const Check& c : checks) {
    const double err = std::abs(c.got - c.want);
    if (err > worst) {
      worst = err;
      worst_name = c.name;
    }
  }
  const double t = seconds_since(start);
  return {worst <= kFormulaTol && t < kFormulaBudgetS,
          std::to_string(checks.size()) + " examples, max abs error " + fmt(worst) + " (" + worst_name + "), " +
              fmt(t) + " s"};
}

NetworkState random_network(Rng& rng, std::size_t n) {
  NetworkState net;
  for (std::size_t i = 0; i < n; ++i) {
    PathState p;
    p.path_id = static_cast<int>(i);
    p.capacity_mbps = 100;
    p.bandwidth_mbps = rng.uniform(10, 100);
    p.latency_ms = rng.uniform(10, 100);
    p.loss_rate = rng.uniform(0, 0.05);
    p.base_loss_rate = p.loss_rate;
    p.congestion = rng.uniform01();
    p.rtt_ms = modeled_rtt_ms(p.latency_ms, p.congestion);
    net.paths.push_back(p);
  }
  return net;
}

// Enumerates every subset as a bitmask independently of the library's search order.
std::vector<int> enumerate_best(const NetworkState& net, const ControlParams& p, std::size_t cap) {
  const std::size_t n = net.paths.size();
  std::vector<int> best;
  double best_sum = -INFINITY;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> ids;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) {
        ids.push_back(static_cast<int>(i));
        sum += score_path(net.paths[i], p);
      }
    }
    if (ids.size() > cap) continue;
    if (sum > best_sum || (sum == best_sum && ids < best)) {
      best = ids;
      best_sum = sum;
    }
  }
  return best;
}

Outcome path_selection_oracle() {
  const auto start = Clock::now();
  Rng rng(20240501);
  int agree = 0;
  for (int k = 0; k < kSelectionNetworks; ++k) {
    const NetworkState net = random_network(rng, 5);
    ControlParams p;
    p.sel_alpha = rng.uniform(0, 1);
    p.sel_beta = rng.uniform(0, 1);
    p.sel_gamma = rng.uniform(0, 1);
    const int cap = 1 + static_cast<int>(rng.below(5));
    if (select_paths({0, 20, 0.1, cap}, net, p) == enumerate_best(net, p, static_cast<std::size_t>(cap))) ++agree;
  }
  const double t = seconds_since(start);
  return {agree == kSelectionNetworks && t < kSelectionBudgetS,
          std::to_string(agree) + "/" + std::to_string(kSelectionNetworks) + " agree, " + fmt(t) + " s"};
}

Outcome reallocation_oracle() {
  Rng rng(77);
  int agree = 0, fired = 0;
  for (int k = 0; k < kReallocationDraws; ++k) {
    const std::size_t n = 1 + rng.below(6);
    const NetworkState net = random_network(rng, n);
    ControlParams p;
    p.C_th = rng.uniform01();
    p.rho_th = rng.uniform(0, 0.05);
    p.RTT_th_ms = rng.uniform(20, 400);
    p.L_th_ms = rng.uniform(10, 100);
    const int cur = static_cast<int>(rng.below(n));
    const PathState& c = net.paths[static_cast<std::size_t>(cur)];
    auto brute = [&](bool fires, auto key) {
      if (!fires) return cur;
      ++fired;
      int best = cur;
      bool found = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) == cur) continue;
        if (!found || key(net.paths[i]) < key(net.paths[static_cast<std::size_t>(best)])) {
          best = static_cast<int>(i);
          found = true;
        }
      }
      return best;
    };
    const int want_c = brute(c.congestion > p.C_th, [](const PathState& s) { return s.congestion; });
    const int want_d = brute(c.rtt_ms > p.RTT_th_ms || c.latency_ms > p.L_th_ms,
                             [](const PathState& s) { return std::pair{s.rtt_ms, s.latency_ms}; });
    const int want_l = brute(c.loss_rate > p.rho_th, [](const PathState& s) { return s.loss_rate; });
    if (reallocate_on_congestion(cur, net, p).path == want_c && reallocate_on_delay(cur, net, p).path == want_d &&
        reallocate_on_loss(cur, net, p).path == want_l) {
      ++agree;
    }
  }
  return {agree == kReallocationDraws, std::to_string(agree) + "/" + std::to_string(kReallocationDraws) +
                                           " draws agree on all three rules (" + std::to_string(fired) +
                                           " threshold firings)"};
}

Outcome gradient_verification() {
  const auto start = Clock::now();
  const GradCheckReport r = run_gradcheck(0, 50, 1000);
  const double t = seconds_since(start);
  return {r.networks == 50 && r.max_relative_error < kGradTol && t < kGradBudgetS,
          std::to_string(r.networks) + " nets, " + std::to_string(r.parameters_checked) +
              " params, max relative error " + fmt(r.max_relative_error) + ", " + fmt(t) + " s"};
}

Outcome policy_validity() {
  Rng rng(5);
  const std::vector<std::size_t> sizes{22, 16, 45};
  MlpParams actor = make_mlp(sizes, rng);
  std::vector<double> flat = actor.flatten();
  std::vector<double> obs(22);
  double worst_sum = 0.0;
  double min_entry = 1.0;
  for (int k = 0; k < kPolicyDraws; ++k) {
    // Re-draw parameters at a random scale so logits range from flat to extreme.
    const double scale = std::pow(10.0, rng.uniform(-2, 2));
    for (double& w : flat) w = scale * rng.uniform(-1, 1);
    actor.assign(flat);
    for (double& x : obs) x = rng.uniform(-1, 1);
    const std::vector<double> probs = policy(actor, obs);
    const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    min_entry = std::min(min_entry, *std::min_element(probs.begin(), probs.end()));
  }
  return {worst_sum <= kPolicySumTol && min_entry >= 0.0,
          std::to_string(kPolicyDraws) + " draws, max |sum - 1| " + fmt(worst_sum) + ", min entry " + fmt(min_entry)};
}

Outcome conservation() {
  ScenarioConfig cfg;
  cfg.horizon = kConservationSteps;
  cfg.dynamics.n_paths = 5;
  cfg.scheduler = SchedulerKind::acmptc;
  const EpisodeResult r = run_episode(cfg, 42);
  const bool ok = r.records.size() == 3u * kConservationSteps && r.bandwidth_cap_violations == 0 &&
                  r.max_path_utilization <= 1.0 && r.min_cwnd_mbit >= 1.0;
  return {ok, std::to_string(r.records.size() / 3) + " steps, " + std::to_string(r.bandwidth_cap_violations) +
                  " cap violations, max path utilization " + fmt(r.max_path_utilization) + ", min cwnd " +
                  fmt(r.min_cwnd_mbit)};
}

double window_mean(const std::vector<double>& v, int end_episode) {
  const auto end = static_cast<std::size_t>(end_episode);
  const std::size_t begin = end - static_cast<std::size_t>(kToySmoothing);
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end),
                         0.0) /
         kToySmoothing;
}

Outcome toy_mdp_learning() {
  const auto start = Clock::now();
  constexpr int kDominant = 1;
  acmptc::testing::ToyPathMdp env(kDominant);
  AgentConfig cfg;
  cfg.episodes = kToyEpisodes;
  cfg.horizon = kToyHorizon;
  Rng rng(7);
  const TrainingResult r = train(env, make_agents(env, cfg, rng), cfg, rng);

  Rng probe(8);
  env.reset(probe.next_u64());
  int dominant = 0;
  for (int k = 0; k < kToyProbeStates; ++k) {
    const Observation obs = env.draw_state();
    if (decode_action(greedy_action(policy(r.agents[0].actor, obs)), 2).primary_path == kDominant) ++dominant;
  }
  const double share = static_cast<double>(dominant) / kToyProbeStates;
  const double td100 = window_mean(r.episode_td_error, 100);
  const double td500 = window_mean(r.episode_td_error, kToyEpisodes);
  const double t = seconds_since(start);
  return {share >= kToyGreedyShare && td500 < kToyTdRatio * td100 && t < kToyBudgetS,
          "greedy dominant share " + fmt(share) + ", smoothed TD error " + fmt(td100) + " -> " + fmt(td500) +
              " (ratio " + fmt(td500 / td100) + "), " + fmt(t) + " s"};
}

Outcome end_to_end() {
  const auto start = Clock::now();
  ScenarioConfig cfg;
  cfg.scenario_kind = ScenarioKind::variable;
  cfg.agent.episodes = kCompareEpisodes;
  const std::vector<SchedulerKind> kinds{SchedulerKind::mptcp, SchedulerKind::acmptc_drl, SchedulerKind::tcp};
  std::vector<std::uint64_t> seeds(kCompareSeeds);
  std::iota(seeds.begin(), seeds.end(), 1);
  ComparisonOptions options;
  options.training_seed = kCompareTrainingSeed;
  const ComparisonReport r = run_comparison(cfg, kinds, seeds, options);
  const PairedDifference& d = r.differences[0];
  const double tcp = r.columns[2].mean.mean_throughput_mbps;
  const bool tcp_last = tcp < r.columns[0].mean.mean_throughput_mbps && tcp < r.columns[1].mean.mean_throughput_mbps;
  const double t = seconds_since(start);
  const bool ok = d.mean_throughput > 0.0 && d.mean_utility > 0.0 && d.throughput_p_value < kSignLevel &&
                  d.utility_p_value < kSignLevel && tcp_last && t < kCompareBudgetS;
  std::ostringstream os;
  os << "acmptc_drl - mptcp throughput " << d.mean_throughput << " Mbps (wins " << d.throughput_wins << "/"
     << kCompareSeeds << ", p " << d.throughput_p_value << "), utility " << d.mean_utility << " (wins "
     << d.utility_wins << "/" << kCompareSeeds << ", p " << d.utility_p_value << "); throughput mptcp "
     << r.columns[0].mean.mean_throughput_mbps << ", acmptc_drl " << r.columns[1].mean.mean_throughput_mbps
     << ", tcp " << tcp << (tcp_last ? " (last)" : " (not last)") << "; " << t << " s";
  return {ok, os.str()};
}

int run_cli_quiet(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"acmptc"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  acmptc::testing::TempDir dir("acceptance_det");
  write_text_file(dir.path() / "cfg.json", R"({"run": {"horizon": 200, "scenario_kind": "variable"}})");
  const int a = run_cli_quiet({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("a"), "--seed", "9"});
  const int b = run_cli_quiet({"simulate", "--config", dir.str("cfg.json"), "--out", dir.str("b"), "--seed", "9"});
  const std::string ma = acmptc::testing::slurp(dir.path() / "a" / "metrics.csv");
  const std::string mb = acmptc::testing::slurp(dir.path() / "b" / "metrics.csv");
  const bool ok = a == 0 && b == 0 && !ma.empty() && ma == mb;
  return {ok, "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", " + std::to_string(ma.size()) +
                  " bytes, " + (ma == mb ? "identical" : "different")};
}

Outcome constraint_diagnostics() {
  ControlParams p;
  NetworkState net;
  for (int i = 0; i < 3; ++i) {
    PathState s;
    s.path_id = i;
    s.capacity_mbps = 100;
    s.bandwidth_mbps = 80;
    s.latency_ms = 20;
    s.rtt_ms = 40;
    net.paths.push_back(s);
  }
  auto snap = [](int id, std::vector<double> alloc, double lat, double loss, double qos) {
    StreamSnapshot s;
    s.spec.stream_id = id;
    s.assigned_paths = {0};
    s.allocated_mbps = std::move(alloc);
    s.latency_ms = lat;
    s.loss_rate = loss;
    s.qos = qos;
    return s;
  };
  // Planted: path 1 over capacity by 20, stream 0 latency, stream 2 loss and QoS.
  const std::vector<StreamSnapshot> streams{
      snap(0, {10, 60, 0}, p.L_max_ms + 50, 0.0, 0.9),
      snap(1, {10, 60, 0}, 20, p.rho_max, 0.8),
      snap(2, {0, 0, 100}, 20, 0.2, 0.1),
  };
  const std::vector<Violation> v = check_constraints(streams, net, p, {false});
  struct Planted {
    ViolationKind kind;
    int stream;
    int path;
  };
  const std::vector<Planted> planted{{ViolationKind::bandwidth_cap, -1, 1},
                                     {ViolationKind::latency, 0, -1},
                                     {ViolationKind::loss, 2, -1},
                                     {ViolationKind::qos, 2, -1}};
  bool ok = v.size() == planted.size();
  for (std::size_t k = 0; ok && k < v.size(); ++k) {
    ok = v[k].kind == planted[k].kind && v[k].stream_id == planted[k].stream && v[k].path_id == planted[k].path;
  }
  ok = ok && std::abs(v[0].excess() - 20.0) < 1e-12;
  std::string found;
  for (const Violation& x : v) found += (found.empty() ? "" : "; ") + x.describe();
  return {ok, std::to_string(v.size()) + " reported, " + std::to_string(planted.size()) + " planted: " + found};
}

}  // namespace

// Optional arguments select criteria by number; no arguments runs all of them.
int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"formula exactness", formula_exactness},
      {"path-selection oracle", path_selection_oracle},
      {"reallocation-rule oracle", reallocation_oracle},
      {"gradient verification", gradient_verification},
      {"policy validity", policy_validity},
      {"conservation invariant", conservation},
      {"toy-MDP learning", toy_mdp_learning},
      {"end-to-end direction", end_to_end},
      {"determinism", determinism},
      {"constraint diagnostics", constraint_diagnostics},
  };
  std::vector<std::size_t> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(static_cast<std::size_t>(std::atoi(argv[a])));
  int failures = 0;
  int ran = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), k + 1) == selected.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s: %s - %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
