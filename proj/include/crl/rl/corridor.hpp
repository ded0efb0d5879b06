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

#ifndef CRL_RL_CORRIDOR_HPP_
#define CRL_RL_CORRIDOR_HPP_

#include <cstdint>
#include <vector>

#include "crl/rl/ppo.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::rl {

// PPO smoke task: a 1 x length corridor, spawn at one end with a random
// heading, reward 1 on reaching the far cell.
struct CorridorConfig {
  int length = 9;
  int episode_length = 40;
  std::uint64_t frame_budget = 50000;
  int eval_episodes = 200;
  PPOConfig ppo{.horizon = 128, .num_envs = 8};
  nn::EncoderConfig backbone{.channels = {4, 8, 16, 32}};
};

struct CorridorResult {
  double success_rate = 0.0;  // sampled-action policy after training
  std::uint64_t frames = 0;
  int iterations = 0;
  std::vector<double> train_success;  // per iteration, episodes ending inside it
};

world::EnvConfig corridor_env_config(const CorridorConfig& config);
CorridorResult run_corridor(const CorridorConfig& config, std::uint64_t seed);

}  // namespace crl::rl

#endif  // CRL_RL_CORRIDOR_HPP_
