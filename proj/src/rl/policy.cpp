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

#include "crl/rl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::rl {

using nn::Tensor;

namespace {

Tensor frames_to_batch(const std::vector<const float*>& frames, const PolicyConfig& cfg) {
  const std::size_t per = cfg.frame_size();
  std::vector<float> data(frames.size() * per);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::copy_n(frames[i], per, data.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return Tensor({frames.size(), 3, static_cast<std::size_t>(cfg.image_height),
                 static_cast<std::size_t>(cfg.image_width)},
                std::move(data));
}

}  // namespace

void PolicyConfig::validate() const {
  backbone.validate();
  if (hidden < 1 || num_actions < 2) throw ConfigError("policy: hidden >= 1 and >= 2 actions required");
  if (image_height < 1 || image_width < 1) throw ConfigError("policy: image size must be positive");
}

Policy build_policy(const PolicyConfig& config, Rng& rng) {
  config.validate();
  Policy p;
  p.config = config;
  p.backbone = nn::build_encoder(config.backbone, rng);
  const std::size_t feat = config.backbone.feature_dim();
  const std::size_t in = feat * (config.image_goal ? 2 : 1) + config.goal_dim;
  nn::add_gru(p.head, "gru", in, config.hidden, rng);
  // Near-uniform initial action distribution.
  nn::add_dense(p.head, "pi", config.hidden, config.num_actions, rng, 0.01f);
  nn::add_dense(p.head, "v", config.hidden, 1, rng);
  return p;
}

PolicyOutput policy_forward(const Policy& policy, const PolicyInput& input) {
  const PolicyConfig& cfg = policy.config;
  const bool precomputed = input.visual.numel() > 0;
  const std::size_t b = precomputed ? input.visual.dim(0) : input.frames.size();
  if (b == 0) throw ShapeError("policy: empty batch");
  if (precomputed && (input.visual.ndim() != 2 || input.visual.dim(1) != cfg.visual_dim())) {
    throw ShapeError("policy: precomputed features must be [B, " + std::to_string(cfg.visual_dim()) + "]");
  }
  if (input.hidden.ndim() != 2 || input.hidden.dim(0) != b || input.hidden.dim(1) != cfg.hidden) {
    throw ShapeError("policy: hidden state must be [" + std::to_string(b) + ", " +
                     std::to_string(cfg.hidden) + "], got " + nn::to_string(input.hidden.shape()));
  }
  if (input.goals.size() != b * cfg.goal_dim) throw ShapeError("policy: goal vector size mismatch");
  if (!precomputed && cfg.image_goal && input.goal_frames.size() != b) {
    throw ShapeError("policy: goal images missing");
  }

  std::vector<Tensor> parts;
  if (precomputed) {
    parts.push_back(input.visual);
  } else {
    parts.push_back(nn::encode(policy.backbone, cfg.backbone, frames_to_batch(input.frames, cfg)));
    if (cfg.image_goal) {
      parts.push_back(nn::encode(policy.backbone, cfg.backbone, frames_to_batch(input.goal_frames, cfg)));
    }
  }
  if (cfg.goal_dim > 0) parts.push_back(Tensor({b, cfg.goal_dim}, input.goals));
  const Tensor x = parts.size() == 1 ? parts[0] : nn::concat(parts);
  PolicyOutput out;
  out.hidden = nn::gru_cell(policy.head, "gru", x, input.hidden);
  out.logits = nn::apply_dense(policy.head, "pi", out.hidden);
  out.values = nn::apply_dense(policy.head, "v", out.hidden);
  return out;
}

Tensor encode_visual(const Policy& policy, const std::vector<const float*>& frames,
                     const std::vector<const float*>& goal_frames) {
  nn::NoGradGuard no_grad;
  const PolicyConfig& cfg = policy.config;
  Tensor f = nn::encode(policy.backbone, cfg.backbone, frames_to_batch(frames, cfg));
  if (!cfg.image_goal) return f;
  if (goal_frames.size() != frames.size()) throw ShapeError("policy: goal images missing");
  return nn::concat({f, nn::encode(policy.backbone, cfg.backbone, frames_to_batch(goal_frames, cfg))});
}

Tensor mean_entropy(const Tensor& logits) {
  const Tensor logp = nn::log_softmax(logits);
  return nn::scale(nn::sum(nn::mul(nn::softmax(logits), logp)), -1.0f / static_cast<float>(logits.dim(0)));
}

int sample_categorical(std::span<const float> logits, Rng& rng, float* log_prob) {
  double top = -INFINITY;
  for (float l : logits) top = std::max(top, static_cast<double>(l));
  double total = 0.0;
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - top);
    total += p[i];
  }
  const std::size_t a = rng.categorical(p);
  if (log_prob) *log_prob = static_cast<float>(static_cast<double>(logits[a]) - top - std::log(total));
  return static_cast<int>(a);
}

ActResult act(const Policy& policy, const PolicyInput& input, Rng& rng) {
  nn::NoGradGuard no_grad;
  const PolicyOutput out = policy_forward(policy, input);
  const std::size_t b = input.frames.size(), a = policy.config.num_actions;
  ActResult r;
  r.actions.resize(b);
  r.log_probs.resize(b);
  r.values.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    r.actions[i] = sample_categorical(out.logits.data().subspan(i * a, a), rng, &r.log_probs[i]);
    r.values[i] = out.values.data()[i];
  }
  r.hidden = out.hidden.detach();
  return r;
}

std::vector<int> greedy_actions(const Tensor& logits) {
  const std::size_t b = logits.dim(0), a = logits.dim(1);
  std::vector<int> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = logits.data().subspan(i * a, a);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

void reset_hidden_rows(Tensor& hidden, const std::vector<bool>& episode_start) {
  const std::size_t h = hidden.dim(1);
  for (std::size_t i = 0; i < episode_start.size(); ++i) {
    if (episode_start[i]) std::fill_n(hidden.data().begin() + static_cast<std::ptrdiff_t>(i * h), h, 0.0f);
  }
}

}  // namespace crl::rl
