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

#ifndef CRL_WORLDSIM_ENV_HPP_
#define CRL_WORLDSIM_ENV_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/worldsim/agent.hpp"
#include "crl/worldsim/render.hpp"
#include "crl/worldsim/world.hpp"

namespace crl::world {

struct SeedRange {
  std::uint64_t base = 0;
  std::uint64_t count = 1;
  bool contains(std::uint64_t s) const { return s >= base && s - base < count; }
  bool overlaps(const SeedRange& o) const { return base < o.base + o.count && o.base < base + count; }
  bool operator==(const SeedRange&) const = default;
};

// Pretraining never sees held-out worlds; probes and downstream evaluation
// draw from the held-out range.
inline constexpr SeedRange kPretrainWorlds{0, 1ULL << 30};
inline constexpr SeedRange kHeldOutWorlds{1ULL << 40, 1ULL << 30};

enum class TaskKind : std::uint8_t { kFreeRoam = 0, kImageGoal = 1, kStyleGoal = 2, kPointGoal = 3 };

struct EpisodeTask {
  TaskKind kind = TaskKind::kFreeRoam;
  Cell goal_cell;            // ImageGoal, PointGoal
  Heading goal_heading = Heading::kNorth;  // ImageGoal view direction
  int target_class = -1;     // StyleGoal
  Observation goal_obs;      // ImageGoal
  float success_radius = 1.0f;
};

struct EnvConfig {
  WorldGenConfig world;
  RenderConfig render;
  int episode_length = 200;
  // Biological mode: no termination and one visit map for the whole run.
  bool infinite_episode = false;
  // Draw a new world on every reset; otherwise the first world is kept and
  // only the spawn is resampled.
  bool resample_world = true;
  SeedRange world_seeds = kPretrainWorlds;
  // Overrides generation; used for hand-built layouts.
  std::shared_ptr<const WorldSpec> fixed_world;
  std::optional<Cell> fixed_spawn;
  std::optional<Heading> fixed_heading;
  std::optional<Cell> fixed_goal;

  TaskKind task = TaskKind::kFreeRoam;
  float success_radius = 1.0f;
  // Goal-task reward: progress_scale * (d_prev - d_now) - slack_penalty,
  // plus success_bonus on the step that reaches the goal.
  float success_bonus = 2.5f;
  float progress_scale = 1.0f;
  float slack_penalty = 0.01f;

  void validate() const;
};

struct EpisodeSummary {
  int steps = 0;
  int tiles_explored = 0;
  bool success = false;
  int initial_distance = 0;  // geodesic, spawn to goal
  int final_distance = 0;
  int path_length = 0;       // cells actually moved
};

struct StepResult {
  float reward = 0.0f;
  bool done = false;
  bool success = false;
  int visit_count = 0;  // visits to the occupied cell, this one included
  std::optional<EpisodeSummary> episode;  // set when done
};

class Env {
 public:
  Env(EnvConfig config, std::uint64_t seed);

  void reset();
  StepResult step(Action action);

  const Observation& observation() const { return obs_; }
  const WorldSpec& world() const { return *world_; }
  const AgentState& state() const { return state_; }
  const VisitMap& visits() const { return visits_; }
  const EpisodeTask& task() const { return task_; }
  const EnvConfig& config() const { return config_; }
  int style_class() const { return style_class_at(*world_, state_); }
  // Geodesic distance to the goal set; 0 for FreeRoam.
  int goal_distance() const;
  // Task conditioning vector (see goal_feature_dim).
  std::vector<float> goal_features() const;
  std::uint64_t episodes_started() const { return episodes_; }

 private:
  void new_world();
  void setup_task();
  void refresh_observation();

  EnvConfig config_;
  Rng rng_;
  std::shared_ptr<const WorldSpec> world_;
  AgentState state_;
  VisitMap visits_;
  EpisodeTask task_;
  std::vector<int> goal_field_;
  int initial_distance_ = 0;
  int path_length_ = 0;
  Observation obs_;
  std::uint64_t episodes_ = 0;
};

// Width of Env::goal_features for a task: PointGoal gives egocentric
// (forward, right, distance) in units of 16 cells, StyleGoal a one-hot over
// the style classes, other tasks nothing.
int goal_feature_dim(TaskKind task, int num_style_classes);

// Environments stepped in sequence; finished episodes reset automatically.
class VecEnv {
 public:
  VecEnv(const EnvConfig& config, int num_envs, std::uint64_t seed);

  std::vector<StepResult> step(const std::vector<Action>& actions);
  int size() const { return static_cast<int>(envs_.size()); }
  Env& env(int i) { return envs_[static_cast<std::size_t>(i)]; }
  const Env& env(int i) const { return envs_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<Env> envs_;
};

}  // namespace crl::world

#endif  // CRL_WORLDSIM_ENV_HPP_
