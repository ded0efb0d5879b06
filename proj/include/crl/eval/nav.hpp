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

#ifndef CRL_EVAL_NAV_HPP_
#define CRL_EVAL_NAV_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crl/crl/pretrain.hpp"
#include "crl/eval/metrics.hpp"
#include "crl/rl/ppo.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::eval {

std::string task_name(world::TaskKind t);
// Accepts "image", "style", "point".
world::TaskKind parse_task(const std::string& name);

struct NavConfig {
  world::TaskKind task = world::TaskKind::kStyleGoal;
  // World, render, episode and reward settings; the task and seed ranges
  // are filled in from the fields below.
  world::EnvConfig env;
  world::SeedRange train_worlds = world::kPretrainWorlds;
  world::SeedRange eval_worlds = world::kHeldOutWorlds;
  rl::PPOConfig ppo{.num_envs = 8};
  std::size_t policy_hidden = 64;
  std::uint64_t frames = 300000;
  std::uint64_t eval_every = 50000;
  int eval_episodes = 128;
  bool freeze = true;

  void validate() const;
};

struct NavEval {
  std::uint64_t frames = 0;
  NavMetrics metrics;
  int episodes = 0;
  int degenerate = 0;  // episodes spawned on the goal, skipped
};

struct NavResult {
  std::vector<NavEval> curve;
  std::vector<rl::UpdateStats> updates;
  const NavEval& final_eval() const { return curve.back(); }
};

// PPO on a goal task with `encoder` as the policy backbone (copied). With
// freeze set the backbone stays bit-identical. Evaluation runs on held-out
// worlds after every eval_every frames and at the end of the budget.
NavResult downstream_nav_train(const explore::EncoderWeights& encoder, const NavConfig& config,
                               std::uint64_t seed,
                               const std::function<void(const NavEval&)>& on_eval = {});

// Randomly initialized encoder of the given topology.
explore::EncoderWeights random_encoder(const nn::EncoderConfig& config, std::uint64_t seed);

// Sampled-action evaluation of a goal policy: the first ceil(episodes / E)
// episodes of each env.
NavEval evaluate_nav(const rl::Policy& policy, const world::EnvConfig& env, int num_envs, int episodes,
                     std::uint64_t seed);

}  // namespace crl::eval

#endif  // CRL_EVAL_NAV_HPP_
