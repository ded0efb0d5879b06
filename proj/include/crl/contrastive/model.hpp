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

#ifndef CRL_CONTRASTIVE_MODEL_HPP_
#define CRL_CONTRASTIVE_MODEL_HPP_

#include <span>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/contrastive/augment.hpp"
#include "crl/numerics/checkpoint.hpp"
#include "crl/numerics/layers.hpp"
#include "crl/numerics/params.hpp"
#include "crl/numerics/tensor.hpp"

namespace crl::contrastive {

struct ContrastiveConfig {
  float temperature = 0.07f;
  std::size_t projection_dim = 32;
  std::size_t projection_hidden = 128;
  float lr = 1e-4f;

  void validate() const;
  bool operator==(const ContrastiveConfig&) const = default;
};

// Encoder M and projection head g (dense -> relu -> dense).
struct ContrastiveModel {
  nn::EncoderConfig encoder_config;
  ContrastiveConfig config;
  nn::ParamSet encoder;
  nn::ParamSet projection;
};

ContrastiveModel build_model(const nn::EncoderConfig& encoder_config,
                             const ContrastiveConfig& config, Rng& rng);

// batch [N, 3, H, W] -> unit rows [N, projection_dim]
nn::Tensor project(const ContrastiveModel& model, const nn::Tensor& batch);

float sim(std::span<const float> a, std::span<const float> b);

// loss = -(1/N) sum_i log( exp(s_ii) / sum_{j,k} exp(s_jk) ),  s = Z1 Z2^T / tau.
// The denominator is shared by every row and includes the positives.
nn::Tensor infonce_loss(const nn::Tensor& z1, const nn::Tensor& z2, float temperature);

// 1 - z1.z2 for unit latents, clamped to [0, 2].
float intrinsic_reward(std::span<const float> z1, std::span<const float> z2);

// Running standard deviation of raw rewards (Welford, sample variance).
// sigma is taken as 1 until two rewards have been seen.
class RewardNormalizer {
 public:
  static constexpr double kFloor = 1e-8;

  RewardNormalizer() = default;
  explicit RewardNormalizer(const nn::NormalizerState& s) : state_(s) {}

  double sigma() const;
  // r / max(sigma, floor) with the statistics before r, then records r.
  float normalize(float r);
  void update(float r);
  const nn::NormalizerState& state() const { return state_; }

 private:
  nn::NormalizerState state_;
};

// Copies CHW frames into a [N, 3, H, W] tensor, augmenting frame i with its
// own stream derive_seed(seed, {tag, first_index + i}).
nn::Tensor augmented_batch(std::span<const float* const> frames, int height, int width,
                           const AugmentationConfig& aug, std::uint64_t seed, std::uint64_t tag,
                           std::uint64_t first_index = 0);

// Rewards 1 - sim for two augmentations of each frame under the current
// parameters, without recording gradients. Frame i uses the streams
// derive_seed(seed, {0, i}) and derive_seed(seed, {1, i}).
std::vector<float> contrastive_rewards(const ContrastiveModel& model,
                                       std::span<const float* const> frames, int height, int width,
                                       const AugmentationConfig& aug, std::uint64_t seed);

struct ModelUpdateStats {
  double mean_loss = 0.0;
  int updates = 0;
};

// `epochs` passes over `frames` in shuffled minibatches; each minibatch is
// augmented twice and the InfoNCE loss minimized with Adam on both the
// encoder and the head. Trailing minibatches smaller than 2 are dropped.
ModelUpdateStats train_contrastive(ContrastiveModel& model, nn::AdamState& encoder_opt,
                                   nn::AdamState& projection_opt,
                                   std::span<const float* const> frames, int height, int width,
                                   const AugmentationConfig& aug, int epochs, int minibatch,
                                   Rng& rng, std::vector<float>* losses = nullptr);

}  // namespace crl::contrastive

#endif  // CRL_CONTRASTIVE_MODEL_HPP_
