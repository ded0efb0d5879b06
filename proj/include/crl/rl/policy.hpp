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

#ifndef CRL_RL_POLICY_HPP_
#define CRL_RL_POLICY_HPP_

#include <span>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/numerics/layers.hpp"
#include "crl/numerics/params.hpp"
#include "crl/numerics/tensor.hpp"

namespace crl::rl {

struct PolicyConfig {
  nn::EncoderConfig backbone;
  std::size_t hidden = 64;
  std::size_t num_actions = 3;
  // Width of the task conditioning vector appended to the visual features.
  std::size_t goal_dim = 0;
  // Goal images go through the backbone and are appended as features.
  bool image_goal = false;
  int image_height = 32;
  int image_width = 32;

  std::size_t frame_size() const { return static_cast<std::size_t>(3 * image_height * image_width); }
  // Backbone features per sample (doubled with a goal image).
  std::size_t visual_dim() const { return backbone.feature_dim() * (image_goal ? 2 : 1); }
  void validate() const;
};

// Backbone -> [features, goal] -> GRU -> action logits and value. The
// backbone lives in its own set so it can be frozen or swapped for a
// pretrained encoder.
struct Policy {
  PolicyConfig config;
  nn::ParamSet backbone;
  nn::ParamSet head;
};

Policy build_policy(const PolicyConfig& config, Rng& rng);

// Batched inputs for one recurrent step. Pointers reference CHW frames.
struct PolicyInput {
  std::vector<const float*> frames;
  std::vector<const float*> goal_frames;  // image_goal only
  std::vector<float> goals;               // [B, goal_dim]
  nn::Tensor hidden;                      // [B, hidden]
  // Precomputed backbone output [B, visual_dim]; when set, frames and goal
  // frames are not encoded.
  nn::Tensor visual;
};

struct PolicyOutput {
  nn::Tensor logits;  // [B, A]
  nn::Tensor values;  // [B, 1]
  nn::Tensor hidden;  // [B, hidden]
};

PolicyOutput policy_forward(const Policy& policy, const PolicyInput& input);
// Backbone output for the given frames (and goal frames) without recording
// gradients, in the layout PolicyInput::visual expects.
nn::Tensor encode_visual(const Policy& policy, const std::vector<const float*>& frames,
                         const std::vector<const float*>& goal_frames);

struct ActResult {
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<float> values;
  nn::Tensor hidden;
};

// Samples one action per row from softmax(logits) without recording
// gradients.
ActResult act(const Policy& policy, const PolicyInput& input, Rng& rng);
// Highest-probability action per row.
std::vector<int> greedy_actions(const nn::Tensor& logits);
// Mean entropy of the row distributions softmax(logits), differentiable.
nn::Tensor mean_entropy(const nn::Tensor& logits);
int sample_categorical(std::span<const float> logits, Rng& rng, float* log_prob);

// Zeroes hidden rows whose episode just ended.
void reset_hidden_rows(nn::Tensor& hidden, const std::vector<bool>& episode_start);

}  // namespace crl::rl

#endif  // CRL_RL_POLICY_HPP_
