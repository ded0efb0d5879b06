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

#ifndef CRL_CRL_REWARDERS_HPP_
#define CRL_CRL_REWARDERS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/contrastive/model.hpp"
#include "crl/numerics/checkpoint.hpp"
#include "crl/rl/rollout.hpp"

namespace crl::explore {

enum class Method : std::uint8_t { kCRL, kRND, kCounts, kRandom };

std::string method_name(Method m);
// Accepts "crl", "rnd", "counts", "random"; throws ConfigError otherwise.
Method parse_method(const std::string& name);

struct RewarderConfig {
  // Contrastive model encoder; RND predictor and target use the same topology.
  nn::EncoderConfig encoder;
  contrastive::ContrastiveConfig contrastive;
  contrastive::AugmentationConfig augment;
  int model_epochs = 4;
  int model_minibatch = 256;
  float rnd_lr = 1e-4f;

  void validate() const;
};

struct LearnerStats {
  double mean_loss = 0.0;
  int updates = 0;
};

// Source of the nonnegative exploration reward. Raw rewards are scored on the
// observation each transition produced; normalization is applied by the
// caller so every variant shares one code path.
class IntrinsicRewarder {
 public:
  virtual ~IntrinsicRewarder() = default;
  virtual Method method() const = 0;
  // Random exploration acts uniformly and never consults the policy.
  bool uses_policy() const { return method() != Method::kRandom; }
  virtual std::vector<float> raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const = 0;
  // Learner update on the frames of B.
  virtual LearnerStats train(const rl::RolloutBuffer& buffer, Rng& rng) = 0;
  virtual void save(nn::Checkpoint& ckpt) const = 0;
  virtual void load(const nn::Checkpoint& ckpt) = 0;
};

class ContrastiveRewarder final : public IntrinsicRewarder {
 public:
  ContrastiveRewarder(const RewarderConfig& config, int height, int width, Rng& init_rng);
  Method method() const override { return Method::kCRL; }
  std::vector<float> raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const override;
  LearnerStats train(const rl::RolloutBuffer& buffer, Rng& rng) override;
  void save(nn::Checkpoint& ckpt) const override;
  void load(const nn::Checkpoint& ckpt) override;

  contrastive::ContrastiveModel& model() { return model_; }
  const contrastive::ContrastiveModel& model() const { return model_; }

 private:
  RewarderConfig config_;
  int height_, width_;
  contrastive::ContrastiveModel model_;
  nn::AdamState encoder_opt_, projection_opt_;
};

// Predictor regresses the features of a fixed random target network.
class RNDRewarder final : public IntrinsicRewarder {
 public:
  RNDRewarder(const RewarderConfig& config, int height, int width, Rng& init_rng);
  Method method() const override { return Method::kRND; }
  std::vector<float> raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const override;
  LearnerStats train(const rl::RolloutBuffer& buffer, Rng& rng) override;
  void save(nn::Checkpoint& ckpt) const override;
  void load(const nn::Checkpoint& ckpt) override;

  // Squared feature error ||f_pred(x) - f_target(x)||^2 per frame.
  std::vector<float> errors(const std::vector<const float*>& frames) const;
  nn::ParamSet& predictor() { return predictor_; }
  const nn::ParamSet& target() const { return target_; }

 private:
  RewarderConfig config_;
  int height_, width_;
  nn::ParamSet predictor_, target_;
  nn::AdamState opt_;
};

// 1 / sqrt(n) for the n-th visit to the cell reached, counted after the step.
class CountsRewarder final : public IntrinsicRewarder {
 public:
  Method method() const override { return Method::kCounts; }
  std::vector<float> raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const override;
  LearnerStats train(const rl::RolloutBuffer&, Rng&) override { return {}; }
  void save(nn::Checkpoint&) const override {}
  void load(const nn::Checkpoint&) override {}
};

class ZeroRewarder final : public IntrinsicRewarder {
 public:
  Method method() const override { return Method::kRandom; }
  std::vector<float> raw_rewards(const rl::RolloutBuffer& buffer, std::uint64_t seed) const override;
  LearnerStats train(const rl::RolloutBuffer&, Rng&) override { return {}; }
  void save(nn::Checkpoint&) const override {}
  void load(const nn::Checkpoint&) override {}
};

float counts_reward(int visit_count);

std::unique_ptr<IntrinsicRewarder> make_rewarder(Method method, const RewarderConfig& config, int height,
                                                 int width, Rng& init_rng);

// Frames [N, 3, H, W] batch from CHW pointers.
nn::Tensor frame_batch(const std::vector<const float*>& frames, int height, int width);

}  // namespace crl::explore

#endif  // CRL_CRL_REWARDERS_HPP_
