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

#include "crl/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::rl {

using nn::Tensor;

void PPOConfig::validate() const {
  if (!(clip > 0.0f && clip < 1.0f)) throw ConfigError("ppo: clip must lie in (0, 1)");
  if (!(gamma > 0.0f && gamma <= 1.0f)) throw ConfigError("ppo: gamma must lie in (0, 1]");
  if (!(lambda > 0.0f && lambda <= 1.0f)) throw ConfigError("ppo: lambda must lie in (0, 1]");
  if (horizon < 1 || epochs < 1 || num_envs < 1 || minibatches < 1) {
    throw ConfigError("ppo: horizon, epochs, num_envs and minibatches must be >= 1");
  }
  if (!(lr > 0.0f) || !(max_grad_norm > 0.0f)) throw ConfigError("ppo: lr and max_grad_norm must be positive");
  if (entropy_coef < 0.0f || value_coef < 0.0f) throw ConfigError("ppo: loss coefficients must be nonnegative");
}

PolicyOptimizer make_policy_optimizer(const PPOConfig& config) {
  PolicyOptimizer o;
  o.backbone.config.lr = config.lr;
  o.head.config.lr = config.lr;
  return o;
}

float clipped_objective(float ratio, float advantage, float clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0f - clip, 1.0f + clip) * advantage);
}

UpdateStats ppo_update(Policy& policy, PolicyOptimizer& optimizer, const RolloutBuffer& buffer,
                       const PPOConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = buffer.size();
  if (buffer.advantages.size() != n || buffer.returns.size() != n) {
    throw ConfigError("ppo: compute_gae must run before ppo_update");
  }
  const PolicyConfig& pc = policy.config;
  const std::size_t fs = buffer.frame_size;
  std::vector<float> adv = buffer.advantages;
  standardize(adv);

  const std::size_t mb_count = std::min<std::size_t>(static_cast<std::size_t>(config.minibatches), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const bool train_backbone = !policy.backbone.frozen();
  std::vector<nn::ParamSet*> sets{&policy.head};
  if (train_backbone) sets.push_back(&policy.backbone);

  // A frozen backbone gives the same features in every epoch.
  Tensor cached;
  if (!train_backbone) {
    std::vector<const float*> frames(n), goal_frames;
    for (std::size_t i = 0; i < n; ++i) frames[i] = buffer.frame(i);
    if (pc.image_goal) {
      for (std::size_t i = 0; i < n; ++i) goal_frames.push_back(buffer.goal_frames.data() + i * fs);
    }
    cached = encode_visual(policy, frames, goal_frames);
  }
  const std::size_t vd = pc.visual_dim();

  UpdateStats stats;
  double kl_sum = 0.0, clipped = 0.0, seen = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t mb = 0; mb < mb_count; ++mb) {
      const std::size_t lo = mb * n / mb_count, hi = (mb + 1) * n / mb_count;
      const std::size_t m = hi - lo;
      PolicyInput in;
      std::vector<float> hidden(m * pc.hidden), old_lp(m), a(m), ret(m);
      std::vector<int> acts(m);
      std::vector<float> visual(train_backbone ? 0 : m * vd);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = order[lo + k];
        if (train_backbone) {
          in.frames.push_back(buffer.frame(i));
          if (pc.image_goal) in.goal_frames.push_back(buffer.goal_frames.data() + i * fs);
        } else {
          std::copy_n(cached.data().begin() + static_cast<std::ptrdiff_t>(i * vd), vd,
                      visual.begin() + static_cast<std::ptrdiff_t>(k * vd));
        }
        in.goals.insert(in.goals.end(), buffer.goals.begin() + static_cast<std::ptrdiff_t>(i * pc.goal_dim),
                        buffer.goals.begin() + static_cast<std::ptrdiff_t>((i + 1) * pc.goal_dim));
        std::copy_n(buffer.hidden_in.begin() + static_cast<std::ptrdiff_t>(i * pc.hidden), pc.hidden,
                    hidden.begin() + static_cast<std::ptrdiff_t>(k * pc.hidden));
        old_lp[k] = buffer.log_probs[i];
        a[k] = adv[i];
        ret[k] = buffer.returns[i];
        acts[k] = buffer.actions[i];
      }
      in.hidden = Tensor({m, pc.hidden}, std::move(hidden));
      if (!train_backbone) in.visual = Tensor({m, vd}, std::move(visual));
      const PolicyOutput out = policy_forward(policy, in);

      const Tensor logp_all = nn::log_softmax(out.logits);
      const Tensor logp = nn::pick(logp_all, acts);
      const Tensor ratio = nn::exp(nn::sub(logp, Tensor({m}, old_lp)));
      const Tensor adv_t({m}, a);
      const Tensor surrogate = nn::mean(nn::minimum(
          nn::mul(ratio, adv_t), nn::mul(nn::clamp(ratio, 1.0f - config.clip, 1.0f + config.clip), adv_t)));
      const Tensor values = nn::reshape(out.values, {m});
      const Tensor value_loss = nn::mean(nn::square(nn::sub(values, Tensor({m}, ret))));
      const Tensor entropy = mean_entropy(out.logits);
      const Tensor loss = nn::add(nn::add(nn::scale(surrogate, -1.0f), nn::scale(value_loss, config.value_coef)),
                                  nn::scale(entropy, -config.entropy_coef));

      double max_err = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const float r = ratio.data()[k];
        kl_sum += static_cast<double>(old_lp[k]) - logp.data()[k];
        if (std::fabs(r - 1.0f) > config.clip) clipped += 1.0;
        max_err = std::max(max_err, static_cast<double>(std::fabs(logp.data()[k] - old_lp[k])));
      }
      seen += static_cast<double>(m);
      if (stats.steps == 0) {
        stats.first_surrogate = surrogate.item();
        stats.first_advantage_mean =
            static_cast<float>(std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(m));
        stats.first_max_ratio_error = static_cast<float>(max_err);
      }

      loss.backward();
      stats.grad_norm += nn::clip_grad_norm(sets, config.max_grad_norm);
      nn::adam_step(policy.head, optimizer.head);
      if (train_backbone) nn::adam_step(policy.backbone, optimizer.backbone);
      stats.policy_loss -= surrogate.item();
      stats.value_loss += value_loss.item();
      stats.entropy += entropy.item();
      ++stats.steps;
    }
  }
  const float s = static_cast<float>(stats.steps);
  stats.policy_loss /= s;
  stats.value_loss /= s;
  stats.entropy /= s;
  stats.grad_norm /= s;
  stats.approx_kl = static_cast<float>(kl_sum / seen);
  stats.clip_fraction = static_cast<float>(clipped / seen);
  return stats;
}

}  // namespace crl::rl
