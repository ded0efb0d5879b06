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

#include "crl/worldsim/agent.hpp"

#include "crl/common/error.hpp"

namespace crl::world {

Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

Cell heading_delta(Heading h) {
  switch (h) {
    case Heading::kNorth: return {0, -1};
    case Heading::kEast: return {1, 0};
    case Heading::kSouth: return {0, 1};
    case Heading::kWest: return {-1, 0};
  }
  return {0, 0};
}

void VisitMap::reset(int width, int height) {
  width_ = width;
  height_ = height;
  tiles_ = 0;
  counts_.assign(static_cast<std::size_t>(width * height), 0);
}

int VisitMap::visit(Cell c) {
  if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) {
    throw ConfigError("VisitMap: cell outside the map");
  }
  int& n = counts_[static_cast<std::size_t>(c.y * width_ + c.x)];
  if (n == 0) ++tiles_;
  return ++n;
}

int VisitMap::count(Cell c) const {
  if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) return 0;
  return counts_[static_cast<std::size_t>(c.y * width_ + c.x)];
}

std::vector<Cell> VisitMap::visited_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (counts_[static_cast<std::size_t>(y * width_ + x)] > 0) out.push_back({x, y});
    }
  }
  return out;
}

AgentState reset_agent(const WorldSpec& world, Rng& rng, VisitMap* visits) {
  const std::size_t free = world.num_free_cells();
  if (free == 0) throw ConfigError("reset: world has no free cells");
  std::size_t pick = rng.below(free);
  AgentState s;
  for (std::size_t i = 0; i < world.cells.size(); ++i) {
    if (world.cells[i].wall) continue;
    if (pick-- == 0) {
      s.cell = {static_cast<int>(i) % world.width, static_cast<int>(i) / world.width};
      break;
    }
  }
  s.heading = static_cast<Heading>(rng.below(4));
  s.steps_taken = 0;
  if (visits) {
    visits->reset(world.width, world.height);
    visits->visit(s.cell);
  }
  return s;
}

StepOutcome step_agent(const WorldSpec& world, const AgentState& state, Action action,
                       int episode_length, VisitMap* visits) {
  StepOutcome out;
  out.state = state;
  switch (action) {
    case Action::kForward: {
      const Cell d = heading_delta(state.heading);
      const Cell next{state.cell.x + d.x, state.cell.y + d.y};
      if (world.is_free(next)) {
        out.state.cell = next;
        out.moved = true;
      }
      break;
    }
    case Action::kTurnLeft: out.state.heading = turn_left(state.heading); break;
    case Action::kTurnRight: out.state.heading = turn_right(state.heading); break;
  }
  ++out.state.steps_taken;
  out.done = episode_length > 0 && out.state.steps_taken >= episode_length;
  if (visits) visits->visit(out.state.cell);
  return out;
}

int style_class_at(const WorldSpec& world, const AgentState& state) {
  const GridCell& c = world.at(state.cell);
  if (c.wall || c.room < 0) throw ConfigError("style_class_at: agent is not in a room");
  return world.rooms[static_cast<std::size_t>(c.room)].style_class;
}

}  // namespace crl::world
