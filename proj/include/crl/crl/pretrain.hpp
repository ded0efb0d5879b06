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

#ifndef CRL_CRL_PRETRAIN_HPP_
#define CRL_CRL_PRETRAIN_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crl/crl/rewarders.hpp"
#include "crl/numerics/checkpoint.hpp"
#include "crl/rl/ppo.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::explore {

enum class RunMode : std::uint8_t { kMultiEnv, kBiological };

std::string mode_name(RunMode m);
RunMode parse_mode(const std::string& name);

struct PretrainConfig {
  Method method = Method::kCRL;
  RunMode mode = RunMode::kMultiEnv;
  std::uint64_t total_frames = 500000;
  world::EnvConfig env;
  rl::PPOConfig ppo;
  // Exploration policy backbone, separate from the representation encoder.
  nn::EncoderConfig policy_backbone{.channels = {4, 8, 16, 32}};
  std::size_t policy_hidden = 64;
  RewarderConfig rewarder;

  // Envs actually stepped: ppo.num_envs, or 1 in biological mode.
  int num_envs() const { return mode == RunMode::kBiological ? 1 : ppo.num_envs; }
  std::uint64_t frames_per_iteration() const;
  void validate() const;
};

struct IterationMetrics {
  int iteration = 0;
  std::uint64_t frames = 0;
  int episodes = 0;
  // Mean over episodes that ended this iteration, else over the episodes in
  // flight; in biological mode the lifetime tile count of the single env.
  double tiles_explored = 0.0;
  double raw_reward = 0.0;
  double reward = 0.0;  // after normalization
  double model_loss = 0.0;
  int model_updates = 0;
  rl::UpdateStats ppo;
};

// Columns of IterationMetrics as written to metrics CSVs.
std::vector<std::string> metric_columns();
std::vector<double> metric_values(const IterationMetrics& m);

struct RolloutProbe {
  const rl::RolloutBuffer& buffer;
  const IntrinsicRewarder& rewarder;
  std::uint64_t reward_seed;
  const std::vector<float>& raw_rewards;
};

struct PretrainHooks {
  // After every iteration.
  std::function<void(const IterationMetrics&)> on_iteration;
  // After rewards are assigned and before any parameter update.
  std::function<void(const RolloutProbe&)> on_rollout;
  // Replaces the learner update (tests freeze the model this way).
  bool skip_learner = false;
};

struct PretrainResult {
  nn::Checkpoint checkpoint;
  std::vector<IterationMetrics> metrics;
  std::uint64_t frames = 0;
  int iterations = 0;
  std::vector<std::vector<float>> sample_frames;  // from the last rollout
  // Mean tiles per episode over the last `final_fraction` of iterations.
  double final_tiles_explored(double final_fraction = 0.1) const;
};

PretrainResult crl_pretrain(const PretrainConfig& config, std::uint64_t seed, const PretrainHooks& hooks = {});

// Encoder configuration persisted in checkpoint metadata under `prefix`.
void put_encoder_config(std::map<std::string, std::string>& meta, const std::string& prefix,
                        const nn::EncoderConfig& config);
nn::EncoderConfig get_encoder_config(const std::map<std::string, std::string>& meta, const std::string& prefix);

// Rebuilds the exploration policy stored in a pretraining checkpoint.
rl::Policy load_exploration_policy(const nn::Checkpoint& ckpt);

// The representation encoder of a checkpoint: the contrastive encoder for
// CRL runs, the RND predictor for RND runs.
struct EncoderWeights {
  nn::EncoderConfig config;
  nn::ParamSet params;
};
EncoderWeights load_representation(const nn::Checkpoint& ckpt);

}  // namespace crl::explore

#endif  // CRL_CRL_PRETRAIN_HPP_
