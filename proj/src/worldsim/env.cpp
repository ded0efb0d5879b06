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

#include "crl/worldsim/env.hpp"

#include <cmath>

#include "crl/common/error.hpp"

namespace crl::world {

namespace {
constexpr std::uint64_t kEnvTag = 0x454e56ULL;  // "ENV"
constexpr float kGoalScale = 16.0f;
}  // namespace

void EnvConfig::validate() const {
  if (!fixed_world) world.validate();
  if (!infinite_episode && episode_length < 1) throw ConfigError("env: episode_length must be >= 1");
  if (world_seeds.count < 1) throw ConfigError("env: empty world seed range");
  if (render.height < 1 || render.width < 1) throw ConfigError("env: image size must be positive");
  if (success_radius < 0.0f) throw ConfigError("env: success_radius must be nonnegative");
  if (fixed_world) {
    if (fixed_spawn && !fixed_world->is_free(*fixed_spawn)) throw ConfigError("env: spawn is a wall");
    if (fixed_goal && !fixed_world->is_free(*fixed_goal)) throw ConfigError("env: goal is a wall");
  }
}

int goal_feature_dim(TaskKind task, int num_style_classes) {
  switch (task) {
    case TaskKind::kPointGoal: return 3;
    case TaskKind::kStyleGoal: return num_style_classes;
    default: return 0;
  }
}

Env::Env(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(derive_seed(seed, {kEnvTag})) {
  config_.validate();
  reset();
}

void Env::new_world() {
  if (config_.fixed_world) {
    world_ = config_.fixed_world;
    return;
  }
  const std::uint64_t s = config_.world_seeds.base + rng_.below(config_.world_seeds.count);
  world_ = std::make_shared<const WorldSpec>(generate_world(s, config_.world));
}

void Env::reset() {
  if (!world_ || config_.resample_world) new_world();
  if (config_.fixed_spawn) {
    state_ = AgentState{};
    state_.cell = *config_.fixed_spawn;
    state_.heading = static_cast<Heading>(rng_.below(4));
    visits_.reset(world_->width, world_->height);
    visits_.visit(state_.cell);
  } else {
    state_ = reset_agent(*world_, rng_, &visits_);
  }
  if (config_.fixed_heading) state_.heading = *config_.fixed_heading;
  setup_task();
  path_length_ = 0;
  ++episodes_;
  refresh_observation();
}

void Env::setup_task() {
  task_ = EpisodeTask{};
  task_.kind = config_.task;
  task_.success_radius = config_.success_radius;
  goal_field_.clear();
  initial_distance_ = 0;
  if (config_.task == TaskKind::kFreeRoam) return;

  const WorldSpec& w = *world_;
  const auto from_spawn = distance_field(w, {state_.cell});
  const auto far_enough = [&](int d) { return d >= 0 && static_cast<float>(d) > config_.success_radius; };

  if (config_.task == TaskKind::kStyleGoal) {
    std::vector<int> best(static_cast<std::size_t>(w.num_style_classes), -1);
    for (std::size_t i = 0; i < w.cells.size(); ++i) {
      if (w.cells[i].wall || from_spawn[i] < 0) continue;
      const int cls = w.rooms[static_cast<std::size_t>(w.cells[i].room)].style_class;
      int& b = best[static_cast<std::size_t>(cls)];
      if (b < 0 || from_spawn[i] < b) b = from_spawn[i];
    }
    std::vector<int> candidates, present;
    for (int c = 0; c < w.num_style_classes; ++c) {
      if (best[static_cast<std::size_t>(c)] < 0) continue;
      present.push_back(c);
      if (far_enough(best[static_cast<std::size_t>(c)])) candidates.push_back(c);
    }
    if (candidates.empty()) candidates = present;
    task_.target_class = candidates[rng_.below(candidates.size())];
    std::vector<Cell> sources;
    for (std::size_t i = 0; i < w.cells.size(); ++i) {
      if (!w.cells[i].wall &&
          w.rooms[static_cast<std::size_t>(w.cells[i].room)].style_class == task_.target_class) {
        sources.push_back({static_cast<int>(i) % w.width, static_cast<int>(i) / w.width});
      }
    }
    goal_field_ = distance_field(w, sources);
  } else {
    Cell goal;
    if (config_.fixed_goal) {
      goal = *config_.fixed_goal;
    } else {
      std::vector<Cell> far, any;
      for (std::size_t i = 0; i < w.cells.size(); ++i) {
        const Cell c{static_cast<int>(i) % w.width, static_cast<int>(i) / w.width};
        if (from_spawn[i] > 0) any.push_back(c);
        if (far_enough(from_spawn[i])) far.push_back(c);
      }
      const auto& pool = !far.empty() ? far : any;
      goal = pool.empty() ? state_.cell : pool[rng_.below(pool.size())];
    }
    task_.goal_cell = goal;
    goal_field_ = distance_field(w, {goal});
    if (config_.task == TaskKind::kImageGoal) {
      task_.goal_heading = static_cast<Heading>(rng_.below(4));
      AgentState view;
      view.cell = goal;
      view.heading = task_.goal_heading;
      task_.goal_obs = render(w, view, config_.render);
    }
  }
  initial_distance_ = goal_distance();
  if (initial_distance_ < 0) throw UnreachableError("env: goal unreachable from spawn");
}

int Env::goal_distance() const {
  if (goal_field_.empty()) return 0;
  return goal_field_[static_cast<std::size_t>(state_.cell.y * world_->width + state_.cell.x)];
}

std::vector<float> Env::goal_features() const {
  std::vector<float> f(static_cast<std::size_t>(goal_feature_dim(config_.task, world_->num_style_classes)), 0.0f);
  if (config_.task == TaskKind::kPointGoal) {
    const Cell d = heading_delta(state_.heading);
    const float gx = static_cast<float>(task_.goal_cell.x - state_.cell.x);
    const float gy = static_cast<float>(task_.goal_cell.y - state_.cell.y);
    f[0] = (gx * static_cast<float>(d.x) + gy * static_cast<float>(d.y)) / kGoalScale;
    f[1] = (gx * static_cast<float>(-d.y) + gy * static_cast<float>(d.x)) / kGoalScale;
    f[2] = std::sqrt(gx * gx + gy * gy) / kGoalScale;
  } else if (config_.task == TaskKind::kStyleGoal) {
    f[static_cast<std::size_t>(task_.target_class)] = 1.0f;
  }
  return f;
}

StepResult Env::step(Action action) {
  const int before = goal_distance();
  const StepOutcome out = step_agent(*world_, state_, action,
                                     config_.infinite_episode ? 0 : config_.episode_length, &visits_);
  state_ = out.state;
  if (out.moved) ++path_length_;
  StepResult r;
  r.visit_count = visits_.count(state_.cell);
  if (config_.task != TaskKind::kFreeRoam) {
    const int now = goal_distance();
    r.success = static_cast<float>(now) <= config_.success_radius;
    r.reward = config_.progress_scale * static_cast<float>(before - now) - config_.slack_penalty;
    if (r.success) r.reward += config_.success_bonus;
  }
  r.done = out.done || r.success;
  if (r.done) {
    EpisodeSummary s;
    s.steps = state_.steps_taken;
    s.tiles_explored = visits_.tiles_explored();
    s.success = r.success;
    s.initial_distance = initial_distance_;
    s.final_distance = goal_distance();
    s.path_length = path_length_;
    r.episode = s;
  }
  refresh_observation();
  return r;
}

void Env::refresh_observation() {
  if (obs_.height != config_.render.height || obs_.width != config_.render.width) {
    obs_ = Observation(config_.render.height, config_.render.width);
  }
  render_into(*world_, state_, config_.render, obs_.pixels.data());
}

VecEnv::VecEnv(const EnvConfig& config, int num_envs, std::uint64_t seed) {
  if (num_envs < 1) throw ConfigError("VecEnv: need at least one environment");
  envs_.reserve(static_cast<std::size_t>(num_envs));
  for (int i = 0; i < num_envs; ++i) {
    envs_.emplace_back(config, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
  }
}

std::vector<StepResult> VecEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != envs_.size()) throw ShapeError("VecEnv: one action per environment required");
  std::vector<StepResult> out(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    out[i] = envs_[i].step(actions[i]);
    if (out[i].done) envs_[i].reset();
  }
  return out;
}

}  // namespace crl::world
