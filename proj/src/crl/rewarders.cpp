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

#include "crl/crl/rewarders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::explore {

using nn::Tensor;

std::string method_name(Method m) {
  switch (m) {
    case Method::kCRL: return "crl";
    case Method::kRND: return "rnd";
    case Method::kCounts: return "counts";
    case Method::kRandom: return "random";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kCRL, Method::kRND, Method::kCounts, Method::kRandom}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown rewarder '" + name + "' (expected crl, rnd, counts or random)");
}

void RewarderConfig::validate() const {
  encoder.validate();
  contrastive.validate();
  augment.validate();
  if (model_epochs < 1) throw ConfigError("rewarder: model_epochs must be >= 1");
  if (model_minibatch < 2) throw ConfigError("rewarder: model_minibatch must be >= 2");
  if (!(rnd_lr > 0.0f)) throw ConfigError("rewarder: rnd_lr must be positive");
}

Tensor frame_batch(const std::vector<const float*>& frames, int height, int width) {
  const std::size_t per = static_cast<std::size_t>(3 * height * width);
  std::vector<float> data(frames.size() * per);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::copy_n(frames[i], per, data.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return Tensor({frames.size(), 3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                std::move(data));
}

float counts_reward(int visit_count) {
  return 1.0f / std::sqrt(static_cast<float>(std::max(visit_count, 1)));
}

// Contrastive

ContrastiveRewarder::ContrastiveRewarder(const RewarderConfig& config, int height, int width, Rng& init_rng)
    : config_(config), height_(height), width_(width),
      model_(contrastive::build_model(config.encoder, config.contrastive, init_rng)) {
  config_.validate();
  encoder_opt_.config.lr = config.contrastive.lr;
  projection_opt_.config.lr = config.contrastive.lr;
}

std::vector<float> ContrastiveRewarder::raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const {
  const auto frames = buffer.next_frame_pointers();
  return contrastive::contrastive_rewards(model_, frames, height_, width_, config_.augment, seed);
}

LearnerStats ContrastiveRewarder::train(const rl::RolloutBuffer& buffer, Rng& rng) {
  const auto frames = buffer.frame_pointers();
  const auto s = contrastive::train_contrastive(model_, encoder_opt_, projection_opt_, frames, height_, width_,
                                                config_.augment, config_.model_epochs,
                                                config_.model_minibatch, rng);
  return {s.mean_loss, s.updates};
}

void ContrastiveRewarder::save(nn::Checkpoint& ckpt) const {
  ckpt.add_params("crl.encoder", model_.encoder);
  ckpt.add_params("crl.projection", model_.projection);
  ckpt.optimizers.emplace_back("crl.encoder", encoder_opt_);
  ckpt.optimizers.emplace_back("crl.projection", projection_opt_);
}

void ContrastiveRewarder::load(const nn::Checkpoint& ckpt) {
  ckpt.load_params("crl.encoder", model_.encoder);
  ckpt.load_params("crl.projection", model_.projection);
  if (const auto* o = ckpt.optimizer("crl.encoder")) encoder_opt_ = *o;
  if (const auto* o = ckpt.optimizer("crl.projection")) projection_opt_ = *o;
}

// RND

RNDRewarder::RNDRewarder(const RewarderConfig& config, int height, int width, Rng& init_rng)
    : config_(config), height_(height), width_(width) {
  config_.validate();
  target_ = nn::build_encoder(config.encoder, init_rng);
  predictor_ = nn::build_encoder(config.encoder, init_rng);
  target_.set_frozen(true);
  opt_.config.lr = config.rnd_lr;
}

std::vector<float> RNDRewarder::errors(const std::vector<const float*>& frames) const {
  nn::NoGradGuard no_grad;
  std::vector<float> out(frames.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < frames.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, frames.size() - start);
    const std::vector<const float*> part(frames.begin() + static_cast<std::ptrdiff_t>(start),
                                         frames.begin() + static_cast<std::ptrdiff_t>(start + count));
    const Tensor x = frame_batch(part, height_, width_);
    const Tensor p = nn::encode(predictor_, config_.encoder, x);
    const Tensor t = nn::encode(target_, config_.encoder, x);
    const std::size_t d = p.dim(1);
    for (std::size_t i = 0; i < count; ++i) {
      double e = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = static_cast<double>(p.data()[i * d + j]) - t.data()[i * d + j];
        e += diff * diff;
      }
      out[start + i] = static_cast<float>(e);
    }
  }
  return out;
}

std::vector<float> RNDRewarder::raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t) const {
  return errors(buffer.next_frame_pointers());
}

LearnerStats RNDRewarder::train(const rl::RolloutBuffer& buffer, Rng& rng) {
  const auto frames = buffer.frame_pointers();
  const std::size_t n = frames.size();
  Tensor targets;
  {
    nn::NoGradGuard no_grad;
    targets = nn::encode(target_, config_.encoder, frame_batch(frames, height_, width_));
  }
  const std::size_t d = targets.dim(1);
  LearnerStats stats;
  double total = 0.0;
  std::vector<std::size_t> order(n);
  std::vector<const float*> batch;
  for (int epoch = 0; epoch < config_.model_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config_.model_minibatch)) {
      const std::size_t m = std::min(static_cast<std::size_t>(config_.model_minibatch), n - start);
      batch.clear();
      std::vector<float> tgt(m * d);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = order[start + k];
        batch.push_back(frames[i]);
        std::copy_n(targets.data().begin() + static_cast<std::ptrdiff_t>(i * d), d,
                    tgt.begin() + static_cast<std::ptrdiff_t>(k * d));
      }
      const Tensor pred = nn::encode(predictor_, config_.encoder, frame_batch(batch, height_, width_));
      const Tensor loss =
          nn::scale(nn::sum(nn::square(nn::sub(pred, Tensor({m, d}, std::move(tgt))))), 1.0f / static_cast<float>(m));
      loss.backward();
      nn::adam_step(predictor_, opt_);
      total += loss.item();
      ++stats.updates;
    }
  }
  stats.mean_loss = stats.updates ? total / stats.updates : 0.0;
  return stats;
}

void RNDRewarder::save(nn::Checkpoint& ckpt) const {
  ckpt.add_params("rnd.predictor", predictor_);
  ckpt.add_params("rnd.target", target_);
  ckpt.optimizers.emplace_back("rnd.predictor", opt_);
}

void RNDRewarder::load(const nn::Checkpoint& ckpt) {
  ckpt.load_params("rnd.predictor", predictor_);
  ckpt.load_params("rnd.target", target_);
  if (const auto* o = ckpt.optimizer("rnd.predictor")) opt_ = *o;
}

// Counts and zero

std::vector<float> CountsRewarder::raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t) const {
  std::vector<float> out(buffer.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts_reward(buffer.visit_counts[i]);
  return out;
}

std::vector<float> ZeroRewarder::raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t) const {
  return std::vector<float>(buffer.size(), 0.0f);
}

std::unique_ptr<IntrinsicRewarder> make_rewarder(Method method, const RewarderConfig& config, int height,
                                                 int width, Rng& init_rng) {
  switch (method) {
    case Method::kCRL: return std::make_unique<ContrastiveRewarder>(config, height, width, init_rng);
    case Method::kRND: return std::make_unique<RNDRewarder>(config, height, width, init_rng);
    case Method::kCounts: return std::make_unique<CountsRewarder>();
    case Method::kRandom: return std::make_unique<ZeroRewarder>();
  }
  throw ConfigError("unknown rewarder");
}

}  // namespace crl::explore
