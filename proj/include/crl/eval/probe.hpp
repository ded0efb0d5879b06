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

#ifndef CRL_EVAL_PROBE_HPP_
#define CRL_EVAL_PROBE_HPP_

#include <cstdint>
#include <vector>

#include "crl/numerics/layers.hpp"
#include "crl/numerics/params.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::eval {

struct ProbeConfig {
  world::WorldGenConfig world;
  world::RenderConfig render;
  world::SeedRange worlds = world::kHeldOutWorlds;
  int num_worlds = 48;
  int samples_per_world = 40;
  // Trailing share of the worlds used for validation.
  double val_fraction = 0.25;
  float lr = 1e-2f;
  int max_epochs = 200;
  int minibatch = 128;

  void validate() const;
};

// Renders from uniformly sampled free poses, labelled with the style class
// of the room the agent stands in.
struct ProbeData {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<float> frames;  // [N, 3, H, W]
  std::vector<int> labels;
  std::vector<int> world_index;
  std::size_t size() const { return labels.size(); }
};

ProbeData collect_probe_data(const ProbeConfig& config, std::uint64_t seed);

struct ProbeResult {
  double top1 = 0.0;                // validation accuracy
  std::vector<double> per_class;    // validation accuracy per class (NaN-free: 0 when absent)
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  int epochs = 0;                   // epochs until validation loss rose
};

// Single dense layer + softmax cross-entropy on standardized features [N, D],
// stopped when the validation loss first increases; the best epoch's weights
// are scored.
ProbeResult train_linear_probe(const std::vector<float>& train_x, const std::vector<int>& train_y,
                               const std::vector<float>& val_x, const std::vector<int>& val_y, std::size_t dim,
                               int num_classes, const ProbeConfig& config, std::uint64_t seed);

// Frozen-encoder features of every probe frame, [N, feature_dim].
std::vector<float> probe_features(const nn::ParamSet& encoder, const nn::EncoderConfig& config,
                                  const ProbeData& data);

ProbeResult linear_probe(const nn::ParamSet& encoder, const nn::EncoderConfig& config, const ProbeData& data,
                         const ProbeConfig& probe, std::uint64_t seed);

}  // namespace crl::eval

#endif  // CRL_EVAL_PROBE_HPP_
