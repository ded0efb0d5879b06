// Copyright 2026 The CRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRL_RL_ROLLOUT_HPP_
#define CRL_RL_ROLLOUT_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/rl/policy.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::rl {

// Fixed-horizon trajectory storage; sample (t, e) lives at index t * E + e.
struct RolloutBuffer {
  int num_envs = 0;
  int horizon = 0;
  std::size_t frame_size = 0;
  std::size_t goal_dim = 0;
  std::size_t hidden = 0;
  bool image_goal = false;

  std::vector<float> frames;       // observation seen before acting
  std::vector<float> goal_frames;  // image_goal only
  std::vector<float> goals;
  std::vector<float> hidden_in;    // recurrent state fed to the policy
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<float> values;
  std::vector<float> rewards;      // what PPO optimizes
  std::vector<float> env_rewards;  // task reward returned by the environment
  std::vector<std::uint8_t> dones; // the episode ended with this step
  std::vector<int> visit_counts;
  std::vector<float> bootstrap_values;  // [E], value of the state after the last step
  std::vector<float> final_frames;      // [E], observation after the last step
  std::map<std::size_t, std::vector<float>> terminal_frames;  // last frame of ended episodes

  std::vector<float> advantages;
  std::vector<float> returns;

  RolloutBuffer() = default;
  RolloutBuffer(int num_envs, int horizon, std::size_t frame_size, std::size_t goal_dim,
                std::size_t hidden, bool image_goal);

  std::size_t size() const { return static_cast<std::size_t>(num_envs) * static_cast<std::size_t>(horizon); }
  std::size_t index(int t, int e) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_envs) + static_cast<std::size_t>(e);
  }
  const float* frame(std::size_t i) const { return frames.data() + i * frame_size; }
  // Observation produced by the action at sample i.
  const float* next_frame(std::size_t i) const;
  std::vector<const float*> frame_pointers() const;
  std::vector<const float*> next_frame_pointers() const;
};

// Per-env recurrent state carried across rollouts.
struct RolloutState {
  nn::Tensor hidden;
  std::vector<bool> episode_start;
  RolloutState() = default;
  RolloutState(int num_envs, std::size_t hidden_size);
};

struct RolloutStats {
  std::vector<world::EpisodeSummary> episodes;
  std::vector<int> episode_env;  // env index of each finished episode
  double env_reward_sum = 0.0;
};

struct CollectOptions {
  // Uniform random actions without querying the policy.
  bool uniform_actions = false;
  // Greedy instead of sampled actions.
  bool greedy = false;
};

using RewardFn = std::function<void(RolloutBuffer&)>;

// Fills the buffer with num_envs x horizon transitions. Rewards start as the
// environment reward; `reward_fn`, when given, may overwrite them once the
// rollout is complete. Finished episodes reset inside the VecEnv.
RolloutStats collect_rollout(world::VecEnv& envs, const Policy& policy, RolloutState& state,
                             RolloutBuffer& buffer, Rng& rng, const RewardFn& reward_fn = {},
                             const CollectOptions& options = {});

// Generalized advantage estimation into buffer.advantages and buffer.returns
// (returns = advantages + values, before any standardization).
void compute_gae(RolloutBuffer& buffer, float gamma, float lambda);

// In place: mean 0, std 1 (population std plus 1e-8).
void standardize(std::vector<float>& xs);

}  // namespace crl::rl

#endif  // CRL_RL_ROLLOUT_HPP_
