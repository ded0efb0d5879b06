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

#ifndef CRL_WORLDSIM_WORLD_HPP_
#define CRL_WORLDSIM_WORLD_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crl::world {

using Rgb = std::array<float, 3>;

enum class TextureKind : std::uint8_t { kSolid = 0, kChecker = 1, kStripe = 2, kNoise = 3 };

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct CellRect {
  int x0 = 0, y0 = 0;  // inclusive
  int x1 = 0, y1 = 0;  // exclusive
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(Cell c) const { return c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1; }
  bool operator==(const CellRect&) const = default;
};

struct Palette {
  Rgb wall{};
  Rgb floor{};
  Rgb ceiling{};
  bool operator==(const Palette&) const = default;
};

struct Room {
  CellRect bounds;
  int style_class = 0;
  Palette palette;
  TextureKind texture = TextureKind::kSolid;
  std::uint64_t texture_seed = 0;
  bool operator==(const Room&) const = default;
};

struct GridCell {
  bool wall = true;
  int room = -1;  // -1 for walls
  bool operator==(const GridCell&) const = default;
};

struct WorldGenConfig {
  int width = 48;
  int height = 48;
  int min_rooms = 4;
  int max_rooms = 12;
  int min_room_side = 2;
  int num_style_classes = 8;
  // Per-room uniform jitter added to each palette channel of the class colors.
  float palette_jitter = 0.08f;
  // Probability of an extra door for each adjacent room pair outside the
  // spanning tree.
  float extra_door_prob = 0.15f;

  // Throws ConfigError when the grid cannot hold min_rooms rooms.
  void validate() const;
  bool operator==(const WorldGenConfig&) const = default;
};

struct WorldSpec {
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  int num_style_classes = 0;
  std::vector<Room> rooms;
  std::vector<GridCell> cells;  // row-major, y * width + x

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  const GridCell& at(Cell c) const { return cells[static_cast<std::size_t>(c.y * width + c.x)]; }
  bool is_free(Cell c) const { return in_bounds(c) && !at(c).wall; }
  std::vector<Cell> free_cells() const;
  std::size_t num_free_cells() const;
  bool operator==(const WorldSpec&) const = default;
};

// Class-level palette and texture kind shared by every world, so a style
// class looks alike across seeds (up to per-room jitter).
Palette class_palette(int style_class);
TextureKind class_texture(int style_class);

WorldSpec generate_world(std::uint64_t seed, const WorldGenConfig& config);

// Builds a world from an ASCII layout: '#' is wall, '0'-'9' and 'a'-'z' are
// free cells of the room with that id. `style_classes[i]` (default i % K) is
// the class of room i. Room bounds are the bounding boxes of their cells.
WorldSpec world_from_layout(const std::vector<std::string>& rows,
                            std::vector<int> style_classes = {},
                            int num_style_classes = 8);

// Number of 4-connected components of free cells.
int count_free_components(const WorldSpec& world);

// 4-neighbour BFS distance. Throws UnreachableError when no path exists and
// ConfigError when an endpoint is a wall.
int shortest_path_len(const WorldSpec& world, Cell from, Cell to);
// BFS distances from a set of sources to every cell; -1 marks walls and
// unreachable cells.
std::vector<int> distance_field(const WorldSpec& world, const std::vector<Cell>& sources);

// Byte-level fingerprint of the generated content.
std::uint64_t world_hash(const WorldSpec& world);

}  // namespace crl::world

#endif  // CRL_WORLDSIM_WORLD_HPP_
