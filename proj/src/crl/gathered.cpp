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

#include "crl/crl/gathered.hpp"

#include "crl/common/error.hpp"

namespace crl::explore {

void gather(const rl::Policy* policy, const GatherConfig& config, std::uint64_t seed,
            const std::function<void(const rl::RolloutBuffer&)>& sink) {
  const std::uint64_t per_iter = static_cast<std::uint64_t>(config.num_envs) * static_cast<std::uint64_t>(config.horizon);
  if (config.frames < per_iter) throw BudgetError("gather: budget below one rollout");
  rl::PolicyConfig pc;
  rl::Policy uniform;
  if (policy) {
    pc = policy->config;
  } else {
    pc.backbone.channels = {4, 4, 4, 4};
    pc.hidden = 1;
    pc.image_height = config.env.render.height;
    pc.image_width = config.env.render.width;
    Rng unused(0);
    uniform = rl::build_policy(pc, unused);
  }
  const rl::Policy& actor = policy ? *policy : uniform;
  if (pc.goal_dim != 0 || pc.image_goal) throw ConfigError("gather: exploration policies take no goal input");
  world::VecEnv envs(config.env, config.num_envs, derive_seed(seed, {1}));
  rl::RolloutState state(config.num_envs, pc.hidden);
  rl::RolloutBuffer buffer(config.num_envs, config.horizon, pc.frame_size(), 0, pc.hidden, false);
  Rng rng(derive_seed(seed, {2}));
  rl::CollectOptions opts;
  opts.uniform_actions = policy == nullptr;
  for (std::uint64_t done = 0; done + per_iter <= config.frames; done += per_iter) {
    rl::collect_rollout(envs, actor, state, buffer, rng, {}, opts);
    sink(buffer);
  }
}

std::vector<float> gathered_data_contrastive_loss(const rl::Policy* policy, const GatherConfig& config,
                                                  const RewarderConfig& learner, std::uint64_t seed) {
  learner.validate();
  Rng init(derive_seed(seed, {3}));
  contrastive::ContrastiveModel model = contrastive::build_model(learner.encoder, learner.contrastive, init);
  nn::AdamState enc_opt, proj_opt;
  enc_opt.config.lr = learner.contrastive.lr;
  proj_opt.config.lr = learner.contrastive.lr;
  Rng train_rng(derive_seed(seed, {4}));
  std::vector<float> losses;
  gather(policy, config, seed, [&](const rl::RolloutBuffer& b) {
    const auto frames = b.frame_pointers();
    contrastive::train_contrastive(model, enc_opt, proj_opt, frames, config.env.render.height,
                                   config.env.render.width, learner.augment, learner.model_epochs,
                                   learner.model_minibatch, train_rng, &losses);
  });
  return losses;
}

}  // namespace crl::explore
