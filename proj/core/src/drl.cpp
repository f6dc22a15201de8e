#include "acmptc/drl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "acmptc/error.hpp"

namespace acmptc {

double nudge_factor(Nudge n) {
  switch (n) {
    case Nudge::decrease: return 0.9;
    case Nudge::keep: return 1.0;
    case Nudge::increase: return 1.1;
  }
  return 1.0;
}

ActionSpec decode_action(int flat_index, std::size_t n_paths) {
  if (flat_index < 0 || static_cast<std::size_t>(flat_index) >= action_count(n_paths)) {
    throw InputError("decode_action: index " + std::to_string(flat_index) + " outside [0, " +
                     std::to_string(action_count(n_paths)) + ")");
  }
  ActionSpec a;
  a.flat_index = flat_index;
  a.primary_path = flat_index / kActionsPerPath;
  a.bw_adjust = static_cast<Nudge>((flat_index % kActionsPerPath) / 3);
  a.cwnd_adjust = static_cast<Nudge>(flat_index % 3);
  return a;
}

int encode_action(int primary_path, Nudge bw, Nudge cwnd) {
  return primary_path * kActionsPerPath + static_cast<int>(bw) * 3 + static_cast<int>(cwnd);
}

Observation encode_observation(const NetworkState& network, double feedback, double experience) {
  Observation obs;
  obs.reserve(observation_size(network.paths.size()));
  for (const PathState& p : network.paths) {
    obs.push_back(std::clamp(p.bandwidth_mbps / kObsBandwidthMax, 0.0, 1.0));
    obs.push_back(std::clamp(p.latency_ms / kObsLatencyMax, 0.0, 1.0));
    obs.push_back(std::clamp(p.loss_rate / kObsLossMax, 0.0, 1.0));
    obs.push_back(std::clamp(p.congestion, 0.0, 1.0));
  }
  obs.push_back(std::isfinite(feedback) ? feedback : 0.0);
  obs.push_back(std::isfinite(experience) ? experience : 0.0);
  return obs;
}

void AgentConfig::validate() const {
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("agent.discount: must be in (0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("agent.learning_rate: must be > 0");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("agent.epsilon_start: must be in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start)) {
    throw ConfigError("agent.epsilon_end: must be in [0, epsilon_start]");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("agent.epsilon_decay: must be in (0, 1]");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("agent.grad_clip_norm: must be > 0");
  if (episodes < 0) throw ConfigError("agent.episodes: must be >= 0");
  if (horizon < 1) throw ConfigError("agent.horizon: must be >= 1");
  for (std::size_t h : hidden_layers) {
    if (h == 0) throw ConfigError("agent.hidden_layers: widths must be positive");
  }
}

double epsilon_at(const AgentConfig& cfg, int episode) {
  return std::max(cfg.epsilon_end, cfg.epsilon_start * std::pow(cfg.epsilon_decay, episode));
}

Agent make_agent(std::size_t obs_dim, std::size_t n_actions, const AgentConfig& cfg, Rng& rng) {
  std::vector<std::size_t> sizes{obs_dim};
  sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  sizes.push_back(n_actions);
  Agent agent;
  agent.actor = make_mlp(sizes, rng);
  sizes.back() = 1;
  agent.critic = make_mlp(sizes, rng);
  return agent;
}

std::vector<Agent> make_agents(const MultiAgentEnv& env, const AgentConfig& cfg, Rng& rng) {
  std::vector<Agent> agents;
  for (std::size_t j = 0; j < env.agent_count(); ++j) {
    agents.push_back(make_agent(env.observation_dim(), env.action_dim(), cfg, rng));
  }
  return agents;
}

std::vector<double> policy(const MlpParams& actor, std::span<const double> obs) {
  return softmax(mlp_forward(actor, obs));
}

double state_value(const MlpParams& critic, std::span<const double> obs) { return mlp_forward(critic, obs).at(0); }

int sample_action(std::span<const double> probs, double epsilon, Rng& rng) {
  if (probs.empty()) throw InputError("sample_action: empty distribution");
  const double explore = rng.uniform01();
  const double u = rng.uniform01();
  if (explore < epsilon) {
    return std::min(static_cast<int>(u * static_cast<double>(probs.size())), static_cast<int>(probs.size()) - 1);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the cumulative sum: take the last action with mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int greedy_action(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double advantage(double r, double v_next, double v, double discount, bool terminal) {
  return r + discount * v_next * (terminal ? 0.0 : 1.0) - v;
}

MlpParams actor_gradient(const MlpParams& actor, std::span<const double> obs, int action, double adv) {
  const MlpTape tape = mlp_forward_tape(actor, obs);
  std::vector<double> grad = softmax(tape.output());
  if (action < 0 || static_cast<std::size_t>(action) >= grad.size()) {
    throw InputError("actor_gradient: action outside the action space");
  }
  // d(-log softmax_a)/d logits = probs - onehot(a).
  grad[static_cast<std::size_t>(action)] -= 1.0;
  for (double& g : grad) g *= adv;
  return mlp_backward(actor, tape, grad);
}

MlpParams critic_gradient(const MlpParams& critic, std::span<const double> obs, double td_target) {
  const MlpTape tape = mlp_forward_tape(critic, obs);
  const double residual = td_target - tape.output().at(0);
  const double grad[] = {-2.0 * residual};
  return mlp_backward(critic, tape, grad);
}

MlpParams apply_update(MlpParams params, const MlpParams& grad, double learning_rate, double grad_clip_norm) {
  if (params.layer_sizes() != grad.layer_sizes()) throw ShapeError("apply_update: gradient shape mismatch");
  const double norm = std::sqrt(grad.squared_norm());
  double scale = learning_rate;
  if (grad_clip_norm > 0.0 && norm > grad_clip_norm) scale *= grad_clip_norm / norm;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    DenseLayer& p = params.layers[k];
    const DenseLayer& g = grad.layers[k];
    for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= scale * g.weights[i];
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= scale * g.bias[i];
  }
  return params;
}

TrainingResult train(MultiAgentEnv& env, std::vector<Agent> agents, const AgentConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = env.agent_count();
  if (n == 0) throw InputError("train: environment has no agents");
  if (agents.size() != n) {
    throw InputError("train: " + std::to_string(agents.size()) + " agents for " + std::to_string(n) +
                     " environment slots");
  }
  TrainingResult result;
  result.agent_rewards.assign(n, {});

  std::vector<int> actions(n);
  for (int e = 0; e < cfg.episodes; ++e) {
    const double eps = epsilon_at(cfg, e);
    std::vector<Observation> obs = env.reset(rng.next_u64());
    std::vector<double> reward_sum(n, 0.0);
    double td_sq_sum = 0.0;
    std::size_t td_count = 0;
    int steps = 0;
    for (int t = 0; t < cfg.horizon; ++t) {
      for (std::size_t j = 0; j < n; ++j) {
        actions[j] = sample_action(policy(agents[j].actor, obs[j]), eps, rng);
      }
      MultiAgentEnv::Step step = env.step(actions);
      ++steps;
      for (std::size_t j = 0; j < n; ++j) {
        Agent& agent = agents[j];
        const double r = step.rewards[j];
        const double v = state_value(agent.critic, obs[j]);
        const double v_next = state_value(agent.critic, step.observations[j]);
        const double adv = advantage(r, v_next, v, cfg.discount, step.terminal);
        const double td_target = v + adv;

        const MlpParams critic_grad = critic_gradient(agent.critic, obs[j], td_target);
        const MlpParams actor_grad = actor_gradient(agent.actor, obs[j], actions[j], adv);
        const double gnorm = critic_grad.squared_norm() + actor_grad.squared_norm();
        if (!std::isfinite(r) || !std::isfinite(adv) || !std::isfinite(gnorm)) {
          std::ostringstream os;
          os << "training diverged at episode " << e << ", step " << t << ", agent " << j
             << " (reward " << r << ", advantage " << adv << ")";
          throw DivergenceError(os.str());
        }
        agent.critic = apply_update(std::move(agent.critic), critic_grad, cfg.learning_rate, cfg.grad_clip_norm);
        agent.actor = apply_update(std::move(agent.actor), actor_grad, cfg.learning_rate, cfg.grad_clip_norm);

        reward_sum[j] += r;
        td_sq_sum += adv * adv;
        ++td_count;
      }
      obs = std::move(step.observations);
      if (step.terminal) break;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!agents[j].actor.all_finite() || !agents[j].critic.all_finite()) {
        throw DivergenceError("training diverged: non-finite parameters for agent " + std::to_string(j) +
                              " after episode " + std::to_string(e));
      }
    }
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double per_step = steps > 0 ? reward_sum[j] / steps : 0.0;
      result.agent_rewards[j].push_back(per_step);
      mean += per_step;
    }
    result.episode_rewards.push_back(mean / static_cast<double>(n));
    result.episode_td_error.push_back(td_count > 0 ? td_sq_sum / static_cast<double>(td_count) : 0.0);
    result.episode_epsilon.push_back(eps);
  }
  result.agents = std::move(agents);
  return result;
}

double complexity_estimate(double n_agents, double state_dim, double action_dim, double param_count,
                           double iterations) {
  constexpr double kForwardCost = 1.0;
  constexpr double kBackwardCost = 1.0;
  return n_agents * iterations * (kForwardCost * state_dim * param_count + kBackwardCost * action_dim * param_count);
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double actor_loss(const MlpParams& actor, std::span<const double> obs, int action, double adv) {
  const std::vector<double> logits = mlp_forward(actor, obs);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double log_prob = logits[static_cast<std::size_t>(action)] - top - std::log(sum);
  return -log_prob * adv;
}

double critic_loss(const MlpParams& critic, std::span<const double> obs, double target) {
  const double residual = target - mlp_forward(critic, obs).at(0);
  return residual * residual;
}

template <typename Loss>
void check_network(MlpParams params, const MlpParams& analytic, Loss loss, const char* label, std::size_t net,
                   GradCheckReport& report) {
  std::vector<double> flat = params.flatten();
  const std::vector<double> grad = analytic.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + kGradCheckStep;
    params.assign(flat);
    const double up = loss(params);
    flat[i] = saved - kGradCheckStep;
    params.assign(flat);
    const double down = loss(params);
    flat[i] = saved;
    const double numeric = (up - down) / (2.0 * kGradCheckStep);
    const double err = relative_error(grad[i], numeric);
    ++report.parameters_checked;
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      std::ostringstream os;
      os << label << " net " << net << " param " << i << ": analytic " << grad[i] << " numeric " << numeric;
      report.worst = os.str();
    }
  }
  params.assign(flat);
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t networks, std::size_t max_params) {
  Rng rng(seed);
  GradCheckReport report;
  for (std::size_t net = 0; net < networks; ++net) {
    std::vector<std::size_t> sizes;
    std::size_t actor_count = 0;
    std::size_t critic_count = 0;
    do {
      sizes.clear();
      sizes.push_back(2 + rng.below(7));
      const std::size_t hidden = 1 + rng.below(2);
      for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(2 + rng.below(15));
      sizes.push_back(2 + rng.below(8));
      actor_count = mlp_parameter_count(sizes);
      std::vector<std::size_t> critic_sizes = sizes;
      critic_sizes.back() = 1;
      critic_count = mlp_parameter_count(critic_sizes);
    } while (actor_count > max_params || critic_count > max_params);

    const MlpParams actor = make_mlp(sizes, rng);
    std::vector<std::size_t> critic_sizes = sizes;
    critic_sizes.back() = 1;
    MlpParams critic = make_mlp(critic_sizes, rng);
    // Non-zero biases exercise the bias paths too.
    for (DenseLayer& l : critic.layers) {
      for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
    }

    std::vector<double> obs(sizes.front());
    for (double& x : obs) x = rng.uniform(-1.0, 1.0);
    const int action = static_cast<int>(rng.below(sizes.back()));
    const double adv = rng.uniform(-2.0, 2.0);
    const double target = rng.uniform(-2.0, 2.0);

    check_network(actor, actor_gradient(actor, obs, action, adv),
                  [&](const MlpParams& p) { return actor_loss(p, obs, action, adv); }, "actor", net, report);
    check_network(critic, critic_gradient(critic, obs, target),
                  [&](const MlpParams& p) { return critic_loss(p, obs, target); }, "critic", net, report);
    ++report.networks;
  }
  return report;
}

}  // namespace acmptc
