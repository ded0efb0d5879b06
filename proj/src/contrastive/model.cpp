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

#include "crl/contrastive/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::contrastive {

using nn::Tensor;

void ContrastiveConfig::validate() const {
  if (!(temperature > 0.0f)) throw ConfigError("contrastive: temperature must be positive");
  if (projection_dim < 1 || projection_hidden < 1) {
    throw ConfigError("contrastive: projection sizes must be positive");
  }
  if (!(lr > 0.0f)) throw ConfigError("contrastive: lr must be positive");
}

ContrastiveModel build_model(const nn::EncoderConfig& encoder_config,
                             const ContrastiveConfig& config, Rng& rng) {
  encoder_config.validate();
  config.validate();
  ContrastiveModel m;
  m.encoder_config = encoder_config;
  m.config = config;
  m.encoder = nn::build_encoder(encoder_config, rng);
  nn::add_dense(m.projection, "proj0", encoder_config.feature_dim(), config.projection_hidden, rng);
  nn::add_dense(m.projection, "proj1", config.projection_hidden, config.projection_dim, rng);
  return m;
}

Tensor project(const ContrastiveModel& model, const Tensor& batch) {
  Tensor h = nn::encode(model.encoder, model.encoder_config, batch);
  h = nn::relu(nn::apply_dense(model.projection, "proj0", h));
  h = nn::apply_dense(model.projection, "proj1", h);
  return nn::l2_normalize(h);
}

float sim(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("sim: vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return static_cast<float>(s);
}

Tensor infonce_loss(const Tensor& z1, const Tensor& z2, float temperature) {
  if (z1.ndim() != 2 || z1.shape() != z2.shape() || z1.dim(0) < 1) {
    throw ShapeError("infonce_loss: expected two [N, D] latent sets with N >= 1, got " +
                     nn::to_string(z1.shape()) + " and " + nn::to_string(z2.shape()));
  }
  if (!(temperature > 0.0f)) throw ConfigError("infonce_loss: temperature must be positive");
  return nn::infonce(z1, z2, temperature);
}

float intrinsic_reward(std::span<const float> z1, std::span<const float> z2) {
  if (z1.size() != z2.size()) throw ShapeError("intrinsic_reward: latents differ in length");
  // Equal to 1 - z1.z2 for unit vectors, and exactly 0 for identical ones.
  double sq = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    const double diff = static_cast<double>(z1[i]) - z2[i];
    sq += diff * diff;
  }
  return std::clamp(static_cast<float>(0.5 * sq), 0.0f, 2.0f);
}

double RewardNormalizer::sigma() const {
  if (state_.count < 2) return 1.0;
  return std::sqrt(state_.m2 / static_cast<double>(state_.count - 1));
}

float RewardNormalizer::normalize(float r) {
  const float out = static_cast<float>(r / std::max(sigma(), kFloor));
  update(r);
  return out;
}

void RewardNormalizer::update(float r) {
  state_.count += 1;
  const double delta = r - state_.mean;
  state_.mean += delta / static_cast<double>(state_.count);
  state_.m2 += delta * (r - state_.mean);
}

Tensor augmented_batch(std::span<const float* const> frames, int height, int width,
                       const AugmentationConfig& aug, std::uint64_t seed, std::uint64_t tag,
                       std::uint64_t first_index) {
  const std::size_t n = frames.size();
  const std::size_t per = static_cast<std::size_t>(3 * height * width);
  Tensor out = Tensor::zeros({n, 3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  float* dst = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {tag, first_index + i}));
    apply_augment(frames[i], height, width, sample_augment(height, width, aug, rng), dst + i * per);
  }
  return out;
}

std::vector<float> contrastive_rewards(const ContrastiveModel& model,
                                       std::span<const float* const> frames, int height, int width,
                                       const AugmentationConfig& aug, std::uint64_t seed) {
  nn::NoGradGuard no_grad;
  std::vector<float> rewards(frames.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < frames.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, frames.size() - start);
    const auto part = frames.subspan(start, count);
    const Tensor z1 = project(model, augmented_batch(part, height, width, aug, seed, 0, start));
    const Tensor z2 = project(model, augmented_batch(part, height, width, aug, seed, 1, start));
    const std::size_t d = z1.dim(1);
    for (std::size_t i = 0; i < count; ++i) {
      rewards[start + i] = intrinsic_reward(z1.data().subspan(i * d, d), z2.data().subspan(i * d, d));
    }
  }
  return rewards;
}

ModelUpdateStats train_contrastive(ContrastiveModel& model, nn::AdamState& encoder_opt,
                                   nn::AdamState& projection_opt,
                                   std::span<const float* const> frames, int height, int width,
                                   const AugmentationConfig& aug, int epochs, int minibatch,
                                   Rng& rng, std::vector<float>* losses) {
  if (minibatch < 2) throw ConfigError("train_contrastive: minibatch must be at least 2");
  ModelUpdateStats stats;
  std::vector<std::size_t> order(frames.size());
  std::vector<const float*> batch;
  double total = 0.0;
  for (int e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start + 2 <= order.size(); start += static_cast<std::size_t>(minibatch)) {
      const std::size_t count = std::min(static_cast<std::size_t>(minibatch), order.size() - start);
      batch.clear();
      for (std::size_t i = 0; i < count; ++i) batch.push_back(frames[order[start + i]]);
      const std::uint64_t s = rng.next_u64();
      const Tensor z1 = project(model, augmented_batch(batch, height, width, aug, s, 0));
      const Tensor z2 = project(model, augmented_batch(batch, height, width, aug, s, 1));
      const Tensor loss = infonce_loss(z1, z2, model.config.temperature);
      loss.backward();
      if (!model.encoder.frozen()) nn::adam_step(model.encoder, encoder_opt);
      nn::adam_step(model.projection, projection_opt);
      total += loss.item();
      ++stats.updates;
      if (losses) losses->push_back(loss.item());
    }
  }
  stats.mean_loss = stats.updates ? total / stats.updates : 0.0;
  return stats;
}

}  // namespace crl::contrastive
