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

#ifndef CRL_WORLDSIM_AGENT_HPP_
#define CRL_WORLDSIM_AGENT_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/worldsim/world.hpp"

namespace crl::world {

// Clockwise order; +y points south.
enum class Heading : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

enum class Action : std::uint8_t { kForward = 0, kTurnLeft = 1, kTurnRight = 2 };
inline constexpr int kNumActions = 3;

Heading turn_left(Heading h);
Heading turn_right(Heading h);
// Unit step in cells for a heading.
Cell heading_delta(Heading h);

struct AgentState {
  Cell cell;
  Heading heading = Heading::kNorth;
  int steps_taken = 0;

  // Continuous position: the agent always stands at its cell center.
  double x() const { return cell.x + 0.5; }
  double y() const { return cell.y + 0.5; }
  bool operator==(const AgentState&) const = default;
};

class VisitMap {
 public:
  VisitMap() = default;
  VisitMap(int width, int height) { reset(width, height); }

  void reset(int width, int height);
  // Returns the count of the cell after the increment.
  int visit(Cell c);
  int count(Cell c) const;
  bool visited(Cell c) const { return count(c) > 0; }
  int tiles_explored() const { return tiles_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::vector<Cell> visited_cells() const;

 private:
  int width_ = 0;
  int height_ = 0;
  int tiles_ = 0;
  std::vector<int> counts_;
};

// Uniform free cell and uniform heading. Seeds `visits` with the start cell
// when given.
AgentState reset_agent(const WorldSpec& world, Rng& rng, VisitMap* visits = nullptr);

struct StepOutcome {
  AgentState state;
  bool done = false;
  bool moved = false;
};

// episode_length <= 0 disables termination.
StepOutcome step_agent(const WorldSpec& world, const AgentState& state, Action action,
                       int episode_length, VisitMap* visits = nullptr);

int style_class_at(const WorldSpec& world, const AgentState& state);

}  // namespace crl::world

#endif  // CRL_WORLDSIM_AGENT_HPP_
