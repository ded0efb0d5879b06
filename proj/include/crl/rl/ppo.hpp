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

#ifndef CRL_RL_PPO_HPP_
#define CRL_RL_PPO_HPP_

#include "crl/common/rng.hpp"
#include "crl/numerics/params.hpp"
#include "crl/rl/policy.hpp"
#include "crl/rl/rollout.hpp"

namespace crl::rl {

struct PPOConfig {
  float lr = 2.5e-4f;
  float clip = 0.2f;
  float entropy_coef = 0.01f;
  float value_coef = 0.5f;
  float gamma = 0.99f;
  float lambda = 0.95f;
  int horizon = 128;
  int epochs = 4;
  int num_envs = 16;
  int minibatches = 4;
  float max_grad_norm = 0.5f;

  void validate() const;
};

struct PolicyOptimizer {
  nn::AdamState backbone;
  nn::AdamState head;
};

PolicyOptimizer make_policy_optimizer(const PPOConfig& config);

struct UpdateStats {
  float policy_loss = 0.0f;  // mean over minibatches of -surrogate
  float value_loss = 0.0f;
  float entropy = 0.0f;
  float approx_kl = 0.0f;
  float clip_fraction = 0.0f;
  float grad_norm = 0.0f;    // before clipping, mean over minibatches
  // First minibatch of the first epoch, before any step.
  float first_surrogate = 0.0f;
  float first_advantage_mean = 0.0f;
  float first_max_ratio_error = 0.0f;
  int steps = 0;
};

// min(c * A, clip(c, 1 - eps, 1 + eps) * A) for scalars.
float clipped_objective(float ratio, float advantage, float clip);

// Clipped-surrogate PPO over the buffer. Requires compute_gae first; the
// advantages are standardized over the whole buffer. A frozen backbone is
// left untouched; the head is always trained.
UpdateStats ppo_update(Policy& policy, PolicyOptimizer& optimizer, const RolloutBuffer& buffer,
                       const PPOConfig& config, Rng& rng);

}  // namespace crl::rl

#endif  // CRL_RL_PPO_HPP_
