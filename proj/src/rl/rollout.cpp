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

#include "crl/rl/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::rl {

RolloutBuffer::RolloutBuffer(int num_envs_, int horizon_, std::size_t frame_size_, std::size_t goal_dim_,
                             std::size_t hidden_, bool image_goal_)
    : num_envs(num_envs_), horizon(horizon_), frame_size(frame_size_), goal_dim(goal_dim_),
      hidden(hidden_), image_goal(image_goal_) {
  if (num_envs < 1 || horizon < 1) throw ConfigError("rollout: num_envs and horizon must be >= 1");
  const std::size_t n = size();
  frames.assign(n * frame_size, 0.0f);
  if (image_goal) goal_frames.assign(n * frame_size, 0.0f);
  goals.assign(n * goal_dim, 0.0f);
  hidden_in.assign(n * hidden, 0.0f);
  actions.assign(n, 0);
  log_probs.assign(n, 0.0f);
  values.assign(n, 0.0f);
  rewards.assign(n, 0.0f);
  env_rewards.assign(n, 0.0f);
  dones.assign(n, 0);
  visit_counts.assign(n, 0);
  bootstrap_values.assign(static_cast<std::size_t>(num_envs), 0.0f);
  final_frames.assign(static_cast<std::size_t>(num_envs) * frame_size, 0.0f);
}

const float* RolloutBuffer::next_frame(std::size_t i) const {
  const std::size_t e_count = static_cast<std::size_t>(num_envs);
  if (dones[i]) return terminal_frames.at(i).data();
  if (i + e_count < size()) return frame(i + e_count);
  return final_frames.data() + (i % e_count) * frame_size;
}

std::vector<const float*> RolloutBuffer::frame_pointers() const {
  std::vector<const float*> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = frame(i);
  return out;
}

std::vector<const float*> RolloutBuffer::next_frame_pointers() const {
  std::vector<const float*> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = next_frame(i);
  return out;
}

RolloutState::RolloutState(int num_envs, std::size_t hidden_size)
    : hidden(nn::Tensor::zeros({static_cast<std::size_t>(num_envs), hidden_size})),
      episode_start(static_cast<std::size_t>(num_envs), true) {}

namespace {

PolicyInput current_input(world::VecEnv& envs, const RolloutState& state, const PolicyConfig& cfg) {
  PolicyInput in;
  const int n = envs.size();
  for (int e = 0; e < n; ++e) {
    const world::Env& env = envs.env(e);
    in.frames.push_back(env.observation().pixels.data());
    if (cfg.image_goal) in.goal_frames.push_back(env.task().goal_obs.pixels.data());
    if (cfg.goal_dim > 0) {
      const auto g = env.goal_features();
      if (g.size() != cfg.goal_dim) throw ShapeError("rollout: goal feature width differs from policy goal_dim");
      in.goals.insert(in.goals.end(), g.begin(), g.end());
    }
  }
  in.hidden = state.hidden;
  return in;
}

}  // namespace

RolloutStats collect_rollout(world::VecEnv& envs, const Policy& policy, RolloutState& state,
                             RolloutBuffer& buffer, Rng& rng, const RewardFn& reward_fn,
                             const CollectOptions& options) {
  const PolicyConfig& cfg = policy.config;
  const int n = envs.size();
  if (buffer.num_envs != n || buffer.frame_size != cfg.frame_size() || buffer.goal_dim != cfg.goal_dim ||
      buffer.hidden != cfg.hidden || buffer.image_goal != cfg.image_goal) {
    throw ShapeError("rollout: buffer layout does not match the policy and environments");
  }
  if (state.hidden.ndim() != 2 || state.hidden.dim(0) != static_cast<std::size_t>(n) ||
      state.hidden.dim(1) != cfg.hidden || state.episode_start.size() != static_cast<std::size_t>(n)) {
    throw ShapeError("rollout: recurrent state does not match the environments");
  }
  nn::NoGradGuard no_grad;
  RolloutStats stats;
  buffer.terminal_frames.clear();
  buffer.advantages.clear();
  buffer.returns.clear();
  const std::size_t fs = buffer.frame_size;
  const float uniform_logp = -std::log(static_cast<float>(cfg.num_actions));

  for (int t = 0; t < buffer.horizon; ++t) {
    reset_hidden_rows(state.hidden, state.episode_start);
    PolicyInput in = current_input(envs, state, cfg);
    for (int e = 0; e < n; ++e) {
      const std::size_t i = buffer.index(t, e);
      std::copy_n(in.frames[static_cast<std::size_t>(e)], fs, buffer.frames.begin() + static_cast<std::ptrdiff_t>(i * fs));
      if (cfg.image_goal) {
        std::copy_n(in.goal_frames[static_cast<std::size_t>(e)], fs,
                    buffer.goal_frames.begin() + static_cast<std::ptrdiff_t>(i * fs));
      }
      std::copy_n(in.goals.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(e) * cfg.goal_dim),
                  cfg.goal_dim, buffer.goals.begin() + static_cast<std::ptrdiff_t>(i * cfg.goal_dim));
      std::copy_n(state.hidden.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(e) * cfg.hidden),
                  cfg.hidden, buffer.hidden_in.begin() + static_cast<std::ptrdiff_t>(i * cfg.hidden));
    }

    std::vector<int> actions(static_cast<std::size_t>(n));
    if (options.uniform_actions) {
      for (int e = 0; e < n; ++e) {
        const std::size_t i = buffer.index(t, e);
        actions[static_cast<std::size_t>(e)] = static_cast<int>(rng.below(cfg.num_actions));
        buffer.log_probs[i] = uniform_logp;
        buffer.values[i] = 0.0f;
      }
    } else if (options.greedy) {
      const PolicyOutput out = policy_forward(policy, in);
      actions = greedy_actions(out.logits);
      const nn::Tensor lp = nn::log_softmax(out.logits);
      for (int e = 0; e < n; ++e) {
        const std::size_t i = buffer.index(t, e);
        buffer.log_probs[i] = lp.data()[static_cast<std::size_t>(e) * cfg.num_actions +
                                        static_cast<std::size_t>(actions[static_cast<std::size_t>(e)])];
        buffer.values[i] = out.values.data()[static_cast<std::size_t>(e)];
      }
      state.hidden = out.hidden.detach();
    } else {
      ActResult r = act(policy, in, rng);
      for (int e = 0; e < n; ++e) {
        const std::size_t i = buffer.index(t, e);
        buffer.log_probs[i] = r.log_probs[static_cast<std::size_t>(e)];
        buffer.values[i] = r.values[static_cast<std::size_t>(e)];
      }
      actions = std::move(r.actions);
      state.hidden = r.hidden;
    }

    for (int e = 0; e < n; ++e) {
      const std::size_t i = buffer.index(t, e);
      world::Env& env = envs.env(e);
      const world::StepResult sr = env.step(static_cast<world::Action>(actions[static_cast<std::size_t>(e)]));
      buffer.actions[i] = actions[static_cast<std::size_t>(e)];
      buffer.env_rewards[i] = sr.reward;
      buffer.dones[i] = sr.done ? 1 : 0;
      buffer.visit_counts[i] = sr.visit_count;
      stats.env_reward_sum += sr.reward;
      if (sr.done) {
        buffer.terminal_frames.emplace(i, env.observation().pixels);
        if (sr.episode) {
          stats.episodes.push_back(*sr.episode);
          stats.episode_env.push_back(e);
        }
        env.reset();
      }
      state.episode_start[static_cast<std::size_t>(e)] = sr.done;
    }
  }

  reset_hidden_rows(state.hidden, state.episode_start);
  for (int e = 0; e < n; ++e) {
    std::copy_n(envs.env(e).observation().pixels.data(), fs,
                buffer.final_frames.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(e) * fs));
  }
  if (options.uniform_actions) {
    std::fill(buffer.bootstrap_values.begin(), buffer.bootstrap_values.end(), 0.0f);
  } else {
    const PolicyOutput out = policy_forward(policy, current_input(envs, state, cfg));
    for (int e = 0; e < n; ++e) buffer.bootstrap_values[static_cast<std::size_t>(e)] = out.values.data()[static_cast<std::size_t>(e)];
  }

  buffer.rewards = buffer.env_rewards;
  if (reward_fn) reward_fn(buffer);
  if (buffer.rewards.size() != buffer.size()) throw ShapeError("rollout: reward function changed the buffer size");
  for (float r : buffer.rewards) {
    if (!std::isfinite(r)) throw Error("rollout: non-finite reward");
  }
  return stats;
}

void compute_gae(RolloutBuffer& buffer, float gamma, float lambda) {
  const std::size_t n = buffer.size();
  buffer.advantages.assign(n, 0.0f);
  buffer.returns.assign(n, 0.0f);
  for (int e = 0; e < buffer.num_envs; ++e) {
    double next_adv = 0.0;
    double next_value = buffer.bootstrap_values[static_cast<std::size_t>(e)];
    for (int t = buffer.horizon - 1; t >= 0; --t) {
      const std::size_t i = buffer.index(t, e);
      const double keep = buffer.dones[i] ? 0.0 : 1.0;
      const double v = buffer.values[i];
      const double delta = buffer.rewards[i] + gamma * next_value * keep - v;
      next_adv = delta + static_cast<double>(gamma) * lambda * keep * next_adv;
      buffer.advantages[i] = static_cast<float>(next_adv);
      buffer.returns[i] = static_cast<float>(next_adv + v);
      next_value = v;
    }
  }
}

void standardize(std::vector<float>& xs) {
  if (xs.empty()) return;
  double mean = 0.0;
  for (float x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (float x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (float& x : xs) x = static_cast<float>((x - mean) * inv);
}

}  // namespace crl::rl
