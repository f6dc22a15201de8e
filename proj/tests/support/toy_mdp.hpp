#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acmptc/drl.hpp"
#include "acmptc/random.hpp"

namespace acmptc::testing {

/// Stationary two-path bandit-like MDP. Each step the agent sees a random state
/// in the 2-path observation layout; choosing the dominant path as primary pays
/// 1, the other path pays 0.2, whatever the nudges and the state. It never
/// terminates: the trainer's horizon truncates episodes and bootstraps.
class ToyPathMdp final : public MultiAgentEnv {
 public:
  static constexpr std::size_t kPaths = 2;

  explicit ToyPathMdp(int dominant_path) : dominant_(dominant_path) {}

  std::size_t agent_count() const override { return 1; }
  std::size_t observation_dim() const override { return observation_size(kPaths); }
  std::size_t action_dim() const override { return action_count(kPaths); }

  std::vector<Observation> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    return {draw_state()};
  }

  Step step(std::span<const int> actions) override {
    Step s;
    const ActionSpec a = decode_action(actions[0], kPaths);
    s.rewards = {a.primary_path == dominant_ ? 1.0 : 0.2};
    s.observations = {draw_state()};
    return s;
  }

  Observation draw_state() {
    Observation obs(observation_dim());
    for (double& x : obs) x = rng_.uniform01();
    return obs;
  }

 private:
  int dominant_;
  Rng rng_{0};
};

}  // namespace acmptc::testing
