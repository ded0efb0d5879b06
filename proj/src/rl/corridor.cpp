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

#include "crl/rl/corridor.hpp"

#include <string>

#include "crl/common/error.hpp"

namespace crl::rl {

world::EnvConfig corridor_env_config(const CorridorConfig& config) {
  if (config.length < 2) throw ConfigError("corridor: length must be >= 2");
  const std::string wall(static_cast<std::size_t>(config.length + 2), '#');
  const std::string row = "#" + std::string(static_cast<std::size_t>(config.length), '0') + "#";
  world::EnvConfig env;
  env.fixed_world = std::make_shared<const world::WorldSpec>(world::world_from_layout({wall, row, wall}));
  env.fixed_spawn = world::Cell{1, 1};
  env.fixed_goal = world::Cell{config.length, 1};
  env.task = world::TaskKind::kPointGoal;
  env.episode_length = config.episode_length;
  env.success_radius = 0.0f;
  env.success_bonus = 1.0f;
  env.progress_scale = 0.0f;
  env.slack_penalty = 0.0f;
  return env;
}

CorridorResult run_corridor(const CorridorConfig& config, std::uint64_t seed) {
  config.ppo.validate();
  const world::EnvConfig env_cfg = corridor_env_config(config);
  const std::uint64_t per_iter =
      static_cast<std::uint64_t>(config.ppo.num_envs) * static_cast<std::uint64_t>(config.ppo.horizon);
  if (config.frame_budget < per_iter) throw BudgetError("corridor: budget below one rollout");

  Rng init_rng(derive_seed(seed, {1}));
  PolicyConfig pc;
  pc.backbone = config.backbone;
  pc.goal_dim = static_cast<std::size_t>(world::goal_feature_dim(env_cfg.task, env_cfg.fixed_world->num_style_classes));
  Policy policy = build_policy(pc, init_rng);
  PolicyOptimizer opt = make_policy_optimizer(config.ppo);

  world::VecEnv envs(env_cfg, config.ppo.num_envs, derive_seed(seed, {2}));
  RolloutState state(config.ppo.num_envs, pc.hidden);
  RolloutBuffer buffer(config.ppo.num_envs, config.ppo.horizon, pc.frame_size(), pc.goal_dim, pc.hidden, false);
  Rng rng(derive_seed(seed, {3}));

  CorridorResult result;
  while (result.frames + per_iter <= config.frame_budget) {
    const RolloutStats rs = collect_rollout(envs, policy, state, buffer, rng);
    compute_gae(buffer, config.ppo.gamma, config.ppo.lambda);
    ppo_update(policy, opt, buffer, config.ppo, rng);
    result.frames += per_iter;
    ++result.iterations;
    int wins = 0;
    for (const auto& ep : rs.episodes) wins += ep.success ? 1 : 0;
    result.train_success.push_back(rs.episodes.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(rs.episodes.size()));
  }

  world::VecEnv eval_envs(env_cfg, config.ppo.num_envs, derive_seed(seed, {4}));
  RolloutState eval_state(config.ppo.num_envs, pc.hidden);
  // The first k episodes of every env, so quick successes are not over-counted.
  const int e_count = config.ppo.num_envs;
  const int per_env = (config.eval_episodes + e_count - 1) / e_count;
  std::vector<int> taken(static_cast<std::size_t>(e_count), 0);
  int episodes = 0, wins = 0;
  while (episodes < per_env * e_count) {
    const RolloutStats rs = collect_rollout(eval_envs, policy, eval_state, buffer, rng);
    for (std::size_t k = 0; k < rs.episodes.size(); ++k) {
      int& t = taken[static_cast<std::size_t>(rs.episode_env[k])];
      if (t == per_env) continue;
      ++t;
      ++episodes;
      wins += rs.episodes[k].success ? 1 : 0;
    }
  }
  result.success_rate = static_cast<double>(wins) / static_cast<double>(episodes);
  return result;
}

}  // namespace crl::rl
