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

#include "crl/eval/nav.hpp"

#include "crl/common/error.hpp"

namespace crl::eval {

namespace {
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kTrainEnvTag = 2;
constexpr std::uint64_t kTrainTag = 3;
constexpr std::uint64_t kEvalTag = 4;
}  // namespace

std::string task_name(world::TaskKind t) {
  switch (t) {
    case world::TaskKind::kImageGoal: return "image";
    case world::TaskKind::kStyleGoal: return "style";
    case world::TaskKind::kPointGoal: return "point";
    case world::TaskKind::kFreeRoam: return "free";
  }
  return "?";
}

world::TaskKind parse_task(const std::string& name) {
  for (auto t : {world::TaskKind::kImageGoal, world::TaskKind::kStyleGoal, world::TaskKind::kPointGoal}) {
    if (task_name(t) == name) return t;
  }
  throw ConfigError("unknown task '" + name + "' (expected image, style or point)");
}

void NavConfig::validate() const {
  if (task == world::TaskKind::kFreeRoam) throw ConfigError("nav: a goal task is required");
  ppo.validate();
  env.validate();
  if (train_worlds.overlaps(eval_worlds)) throw ConfigError("nav: training and evaluation worlds overlap");
  if (eval_every < 1 || eval_episodes < 1) throw ConfigError("nav: eval_every and eval_episodes must be >= 1");
  if (policy_hidden < 1) throw ConfigError("nav: policy hidden size must be >= 1");
}

explore::EncoderWeights random_encoder(const nn::EncoderConfig& config, std::uint64_t seed) {
  explore::EncoderWeights w;
  w.config = config;
  Rng rng(seed);
  w.params = nn::build_encoder(config, rng);
  return w;
}

NavEval evaluate_nav(const rl::Policy& policy, const world::EnvConfig& env, int num_envs, int episodes,
                     std::uint64_t seed) {
  const rl::PolicyConfig& pc = policy.config;
  world::VecEnv envs(env, num_envs, derive_seed(seed, {1}));
  rl::RolloutState state(num_envs, pc.hidden);
  rl::RolloutBuffer buffer(num_envs, 64, pc.frame_size(), pc.goal_dim, pc.hidden, pc.image_goal);
  Rng rng(derive_seed(seed, {2}));
  const int per_env = (episodes + num_envs - 1) / num_envs;
  std::vector<int> taken(static_cast<std::size_t>(num_envs), 0);
  std::vector<NavMetrics> per_episode;
  NavEval out;
  int remaining = per_env * num_envs;
  while (remaining > 0) {
    const rl::RolloutStats rs = rl::collect_rollout(envs, policy, state, buffer, rng);
    for (std::size_t k = 0; k < rs.episodes.size(); ++k) {
      int& t = taken[static_cast<std::size_t>(rs.episode_env[k])];
      if (t == per_env) continue;
      if (rs.episodes[k].initial_distance == 0) {
        ++out.degenerate;
        continue;
      }
      ++t;
      --remaining;
      per_episode.push_back(nav_metrics(rs.episodes[k]));
    }
  }
  out.metrics = mean_metrics(per_episode);
  out.episodes = static_cast<int>(per_episode.size());
  return out;
}

NavResult downstream_nav_train(const explore::EncoderWeights& encoder, const NavConfig& config,
                               std::uint64_t seed, const std::function<void(const NavEval&)>& on_eval) {
  config.validate();
  world::EnvConfig train_env = config.env;
  train_env.task = config.task;
  train_env.world_seeds = config.train_worlds;
  world::EnvConfig eval_env = train_env;
  eval_env.world_seeds = config.eval_worlds;

  rl::PolicyConfig pc;
  pc.backbone = encoder.config;
  pc.hidden = config.policy_hidden;
  pc.image_height = config.env.render.height;
  pc.image_width = config.env.render.width;
  pc.image_goal = config.task == world::TaskKind::kImageGoal;
  pc.goal_dim = static_cast<std::size_t>(world::goal_feature_dim(config.task, config.env.world.num_style_classes));
  Rng init(derive_seed(seed, {kInitTag}));
  rl::Policy policy = rl::build_policy(pc, init);
  policy.backbone.copy_values_from(encoder.params);
  policy.backbone.set_frozen(config.freeze);
  rl::PolicyOptimizer opt = rl::make_policy_optimizer(config.ppo);

  const int n_envs = config.ppo.num_envs;
  const std::uint64_t per_iter = static_cast<std::uint64_t>(n_envs) * static_cast<std::uint64_t>(config.ppo.horizon);
  if (config.frames < per_iter) throw BudgetError("nav: budget below one rollout");
  world::VecEnv envs(train_env, n_envs, derive_seed(seed, {kTrainEnvTag}));
  rl::RolloutState state(n_envs, pc.hidden);
  rl::RolloutBuffer buffer(n_envs, config.ppo.horizon, pc.frame_size(), pc.goal_dim, pc.hidden, pc.image_goal);
  Rng rng(derive_seed(seed, {kTrainTag}));
  const std::uint64_t eval_seed = derive_seed(seed, {kEvalTag});

  NavResult result;
  std::uint64_t frames = 0, next_eval = config.eval_every;
  auto run_eval = [&]() {
    NavEval e = evaluate_nav(policy, eval_env, n_envs, config.eval_episodes, eval_seed);
    e.frames = frames;
    result.curve.push_back(e);
    if (on_eval) on_eval(e);
  };
  while (frames + per_iter <= config.frames) {
    rl::collect_rollout(envs, policy, state, buffer, rng);
    rl::compute_gae(buffer, config.ppo.gamma, config.ppo.lambda);
    result.updates.push_back(rl::ppo_update(policy, opt, buffer, config.ppo, rng));
    frames += per_iter;
    if (frames >= next_eval) {
      run_eval();
      while (next_eval <= frames) next_eval += config.eval_every;
    }
  }
  if (result.curve.empty() || result.curve.back().frames != frames) run_eval();
  return result;
}

}  // namespace crl::eval
