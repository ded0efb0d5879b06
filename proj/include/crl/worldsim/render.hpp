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

#ifndef CRL_WORLDSIM_RENDER_HPP_
#define CRL_WORLDSIM_RENDER_HPP_

#include <string>
#include <vector>

#include "crl/worldsim/agent.hpp"
#include "crl/worldsim/world.hpp"

namespace crl::world {

// RGB image with values in [0, 1], stored channel-major (C, H, W) so it can
// be copied straight into an encoder batch.
struct Observation {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Observation() = default;
  Observation(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(3 * h * w), 0.0f) {}

  float& at(int c, int y, int x) {
    return pixels[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  float at(int c, int y, int x) const {
    return pixels[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  std::size_t size() const { return pixels.size(); }
  bool operator==(const Observation&) const = default;
};

struct RenderConfig {
  int height = 32;
  int width = 32;
  // Brightness falls off as 1 / (1 + falloff * distance).
  float distance_falloff = 0.12f;
};

// Pattern multiplier in (0, 1] at face coordinates (u, v) in [0, 1).
float texture_value(TextureKind kind, std::uint64_t texture_seed, float u, float v);

// Column raycaster with a 90 degree horizontal field of view.
Observation render(const WorldSpec& world, const AgentState& state, const RenderConfig& cfg = {});
void render_into(const WorldSpec& world, const AgentState& state, const RenderConfig& cfg,
                 float* chw);

// Binary PPM (P6, 8-bit).
std::string encode_ppm(const Observation& obs);
// Top-down map: walls black, rooms in their wall color, visited cells
// brightened, agent in white.
std::string encode_map_ppm(const WorldSpec& world, const AgentState* agent = nullptr,
                           const VisitMap* visits = nullptr, int scale = 4);
// Tiles observations into a rows x cols grid image.
Observation tile_observations(const std::vector<Observation>& images, int cols);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace crl::world

#endif  // CRL_WORLDSIM_RENDER_HPP_
