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

#ifndef CRL_CLI_CONFIG_HPP_
#define CRL_CLI_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "crl/crl/gathered.hpp"
#include "crl/crl/pretrain.hpp"
#include "crl/eval/nav.hpp"
#include "crl/eval/probe.hpp"

namespace crl::cli {

// Settings that only the command-line driver consumes.
struct RunSettings {
  std::uint64_t seed = 1;
  explore::Method rewarder = explore::Method::kCRL;
  explore::RunMode mode = explore::RunMode::kMultiEnv;
  world::TaskKind task = world::TaskKind::kStyleGoal;
  bool freeze = true;
  // Pretraining checkpoint consumed by probe, nav, diversity and
  // gathered-loss; empty means a randomly initialized encoder or uniform
  // random actions.
  std::string checkpoint;

  std::uint64_t pretrain_frames = 500000;
  std::uint64_t nav_frames = 300000;
  std::uint64_t gather_frames = 65536;
  std::uint64_t eval_every = 50000;
  int eval_episodes = 128;
  int nav_envs = 8;
  int explore_seeds = 5;
  int diversity_batch = 64;

  int probe_worlds = 48;
  int probe_samples_per_world = 40;
  double probe_val_fraction = 0.25;
  float probe_lr = 1e-2f;
  int probe_max_epochs = 200;
  int probe_minibatch = 128;
};

// Everything a run needs, in the [world] [encoder] [ppo] [contrastive] [run]
// layout of the config file.
struct RunConfig {
  world::WorldGenConfig world;
  world::RenderConfig render;
  int episode_length = 200;
  bool resample_world = true;
  float success_radius = 1.0f;
  float success_bonus = 2.5f;
  float progress_scale = 1.0f;
  float slack_penalty = 0.01f;

  nn::EncoderConfig encoder;
  nn::EncoderConfig policy_backbone{.channels = {4, 8, 16, 32}};
  std::size_t policy_hidden = 64;

  rl::PPOConfig ppo;

  contrastive::ContrastiveConfig contrastive;
  contrastive::AugmentationConfig augment;
  int model_epochs = 4;
  int model_minibatch = 256;
  float rnd_lr = 1e-4f;

  RunSettings run;

  // Throws ConfigError naming the offending section.
  void validate() const;
};

// Parses the sectioned key = value text. Missing keys keep their defaults;
// unknown sections or keys, duplicates and malformed values throw
// ConfigError with the line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Every key in a fixed order; parse_config(to_text(c)) reproduces c and
// to_text of the result is byte-identical.
std::string to_text(const RunConfig& config);

world::EnvConfig env_config(const RunConfig& config);
explore::RewarderConfig rewarder_config(const RunConfig& config);
explore::PretrainConfig pretrain_config(const RunConfig& config);
eval::NavConfig nav_config(const RunConfig& config);
eval::ProbeConfig probe_config(const RunConfig& config);
explore::GatherConfig gather_config(const RunConfig& config);

}  // namespace crl::cli

#endif  // CRL_CLI_CONFIG_HPP_
