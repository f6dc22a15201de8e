#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acmptc/mlp.hpp"
#include "acmptc/net_model.hpp"
#include "acmptc/random.hpp"

namespace acmptc {

/// Per-path (B, L, rho, C) normalized to [0, 1], then feedback, then experience.
using Observation = std::vector<double>;

enum class Nudge : int { decrease = 0, keep = 1, increase = 2 };

/// Multiplicative factor a nudge applies (0.9, 1.0, 1.1).
double nudge_factor(Nudge n);

struct ActionSpec {
  int primary_path = 0;
  Nudge bw_adjust = Nudge::keep;
  Nudge cwnd_adjust = Nudge::keep;
  int flat_index = 0;

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

inline constexpr int kActionsPerPath = 9;

inline std::size_t observation_size(std::size_t n_paths) { return 4 * n_paths + 2; }
inline std::size_t action_count(std::size_t n_paths) { return kActionsPerPath * n_paths; }

ActionSpec decode_action(int flat_index, std::size_t n_paths);
int encode_action(int primary_path, Nudge bw, Nudge cwnd);

// Normalization maxima for observations.
inline constexpr double kObsBandwidthMax = 100.0;
inline constexpr double kObsLatencyMax = 100.0;
inline constexpr double kObsLossMax = 0.05;

Observation encode_observation(const NetworkState& network, double feedback, double experience);

struct AgentConfig {
  double discount = 0.95;
  double learning_rate = 0.01;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  double epsilon_decay = 0.977;
  double grad_clip_norm = 5.0;
  int episodes = 200;
  int horizon = 1000;
  std::vector<std::size_t> hidden_layers{64, 64};

  void validate() const;

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// max(epsilon_end, epsilon_start * decay^episode).
double epsilon_at(const AgentConfig& cfg, int episode);

/// One learner: its own actor (logits over actions) and critic (scalar value).
struct Agent {
  MlpParams actor;
  MlpParams critic;

  friend bool operator==(const Agent&, const Agent&) = default;
};

Agent make_agent(std::size_t obs_dim, std::size_t n_actions, const AgentConfig& cfg, Rng& rng);

std::vector<double> policy(const MlpParams& actor, std::span<const double> obs);
double state_value(const MlpParams& critic, std::span<const double> obs);

/// With probability epsilon an action uniform over all actions, otherwise a draw
/// from `probs`. Consumes exactly two uniforms.
int sample_action(std::span<const double> probs, double epsilon, Rng& rng);

/// Highest-probability action, lowest index on ties.
int greedy_action(std::span<const double> probs);

/// r + discount * v_next * (1 - terminal) - v.
double advantage(double r, double v_next, double v, double discount, bool terminal);

/// Gradient of -log pi(action | obs) * adv w.r.t. the actor parameters.
MlpParams actor_gradient(const MlpParams& actor, std::span<const double> obs, int action, double adv);

/// Gradient of (td_target - V(obs))^2 w.r.t. the critic parameters.
MlpParams critic_gradient(const MlpParams& critic, std::span<const double> obs, double td_target);

/// Global-norm clip of `grad` to `grad_clip_norm`, then params - lr * grad.
MlpParams apply_update(MlpParams params, const MlpParams& grad, double learning_rate, double grad_clip_norm);

/// Environment shared by several agents that act in agent-id order.
class MultiAgentEnv {
 public:
  struct Step {
    std::vector<Observation> observations;
    std::vector<double> rewards;
    bool terminal = false;
  };

  virtual ~MultiAgentEnv() = default;

  virtual std::size_t agent_count() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::vector<Observation> reset(std::uint64_t seed) = 0;
  virtual Step step(std::span<const int> actions) = 0;
};

struct TrainingResult {
  std::vector<Agent> agents;
  /// Mean per-step reward over agents, one entry per episode.
  std::vector<double> episode_rewards;
  /// [agent][episode] mean per-step reward.
  std::vector<std::vector<double>> agent_rewards;
  /// Mean squared TD error over agents and steps, one entry per episode.
  std::vector<double> episode_td_error;
  std::vector<double> episode_epsilon;
};

/// Online multi-agent advantage actor-critic. Every step each agent picks an
/// action, the environment advances once, then each agent updates its critic on
/// the squared advantage and its actor on log-prob times advantage. Episodes run
/// for cfg.horizon steps unless the environment ends them first.
///
/// Throws DivergenceError naming the episode, step and agent if a parameter or
/// gradient becomes non-finite.
TrainingResult train(MultiAgentEnv& env, std::vector<Agent> agents, const AgentConfig& cfg, Rng& rng);

/// Fresh agents sized for `env`.
std::vector<Agent> make_agents(const MultiAgentEnv& env, const AgentConfig& cfg, Rng& rng);

/// Operation-count model n * I * (|S| * N + |A| * N) with unit constants.
double complexity_estimate(double n_agents, double state_dim, double action_dim, double param_count,
                           double iterations);

// Gradient verification.

struct GradCheckReport {
  std::size_t networks = 0;
  std::size_t parameters_checked = 0;
  double max_relative_error = 0.0;
  std::string worst;
};

/// max |a - n| / max(|a|, |n|, kGradCheckFloor) over every parameter.
inline constexpr double kGradCheckFloor = 1e-6;
inline constexpr double kGradCheckStep = 1e-5;

double relative_error(double analytic, double numeric);

/// Central finite differences of both the actor and critic losses over `networks`
/// random small networks with at most `max_params` parameters each.
GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t networks = 50, std::size_t max_params = 1000);

}  // namespace acmptc
