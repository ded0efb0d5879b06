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

#include "crl/worldsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/common/rng.hpp"

namespace crl::world {

namespace {

constexpr std::uint64_t kGenTag = 0x57'4f'52'4c'44ULL;     // "WORLD"
constexpr std::uint64_t kStyleTag = 0x53'54'59'4c'45ULL;   // "STYLE"

Rgb hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

Rgb jitter(Rgb c, float amount, Rng& rng) {
  for (float& v : c) {
    v = std::clamp(v + static_cast<float>(rng.uniform(-amount, amount)), 0.0f, 1.0f);
  }
  return c;
}

struct Adjacency {
  int a = 0, b = 0;
  bool vertical_wall = true;  // wall column between a (left) and b (right)
  int wall = 0;               // x of the wall column or y of the wall row
  int lo = 0, hi = 0;         // overlap range along the wall, [lo, hi)
};

std::vector<Adjacency> find_adjacencies(const std::vector<CellRect>& leaves) {
  std::vector<Adjacency> out;
  for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
    for (int j = 0; j < static_cast<int>(leaves.size()); ++j) {
      if (i == j) continue;
      const CellRect& a = leaves[static_cast<std::size_t>(i)];
      const CellRect& b = leaves[static_cast<std::size_t>(j)];
      if (a.x1 + 1 == b.x0) {
        const int lo = std::max(a.y0, b.y0), hi = std::min(a.y1, b.y1);
        if (lo < hi) out.push_back({i, j, true, a.x1, lo, hi});
      }
      if (a.y1 + 1 == b.y0) {
        const int lo = std::max(a.x0, b.x0), hi = std::min(a.x1, b.x1);
        if (lo < hi) out.push_back({i, j, false, a.y1, lo, hi});
      }
    }
  }
  return out;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

// Binary space partition of the interior into `target` leaves separated by
// one-cell walls. Returns fewer leaves when no leaf can be split further.
std::vector<CellRect> partition(const WorldGenConfig& cfg, int target, Rng& rng) {
  const int m = cfg.min_room_side;
  std::vector<CellRect> leaves = {{1, 1, cfg.width - 1, cfg.height - 1}};
  while (static_cast<int>(leaves.size()) < target) {
    std::vector<double> weights(leaves.size(), 0.0);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const bool sx = leaves[i].width() >= 2 * m + 1;
      const bool sy = leaves[i].height() >= 2 * m + 1;
      if (sx || sy) weights[i] = static_cast<double>(leaves[i].width() * leaves[i].height());
    }
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) break;
    const std::size_t pick = rng.categorical(weights);
    const CellRect r = leaves[pick];
    const bool can_x = r.width() >= 2 * m + 1;
    const bool can_y = r.height() >= 2 * m + 1;
    bool split_x;
    if (can_x && can_y) {
      if (r.width() * 4 > r.height() * 5) {
        split_x = true;
      } else if (r.height() * 4 > r.width() * 5) {
        split_x = false;
      } else {
        split_x = rng.bernoulli(0.5);
      }
    } else {
      split_x = can_x;
    }
    CellRect first = r, second = r;
    if (split_x) {
      const int s = r.x0 + m + static_cast<int>(rng.below(static_cast<std::uint64_t>(r.width() - 2 * m)));
      first.x1 = s;
      second.x0 = s + 1;
    } else {
      const int s = r.y0 + m + static_cast<int>(rng.below(static_cast<std::uint64_t>(r.height() - 2 * m)));
      first.y1 = s;
      second.y0 = s + 1;
    }
    leaves[pick] = first;
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, second);
  }
  return leaves;
}

void assign_style(Room& room, int style_class, float palette_jitter, Rng& rng) {
  room.style_class = style_class;
  const Palette base = class_palette(style_class);
  room.palette.wall = jitter(base.wall, palette_jitter, rng);
  room.palette.floor = jitter(base.floor, palette_jitter, rng);
  room.palette.ceiling = jitter(base.ceiling, palette_jitter, rng);
  room.texture = class_texture(style_class);
  room.texture_seed = rng.next_u64();
}

template <typename T>
void hash_bytes(std::uint64_t& h, const T& value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  for (unsigned char c : buf) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

void WorldGenConfig::validate() const {
  if (width < 8 || height < 8) throw ConfigError("world: grid must be at least 8x8");
  if (num_style_classes < 2) throw ConfigError("world: need at least 2 style classes");
  if (min_room_side < 1) throw ConfigError("world: min_room_side must be positive");
  if (min_rooms < 1 || max_rooms < min_rooms) throw ConfigError("world: bad room count range");
  if (palette_jitter < 0.0f || palette_jitter > 1.0f) {
    throw ConfigError("world: palette_jitter must lie in [0, 1]");
  }
  if (extra_door_prob < 0.0f || extra_door_prob > 1.0f) {
    throw ConfigError("world: extra_door_prob must lie in [0, 1]");
  }
  // Rooms of side m separated by one-cell walls inside a one-cell border.
  const int per_x = (width - 1) / (min_room_side + 1);
  const int per_y = (height - 1) / (min_room_side + 1);
  if (per_x * per_y < min_rooms) {
    throw ConfigError("world: " + std::to_string(width) + "x" + std::to_string(height) +
                      " grid cannot hold " + std::to_string(min_rooms) + " rooms");
  }
}

std::vector<Cell> WorldSpec::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!cells[static_cast<std::size_t>(y * width + x)].wall) out.push_back({x, y});
    }
  }
  return out;
}

std::size_t WorldSpec::num_free_cells() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return !c.wall; }));
}

Palette class_palette(int style_class) {
  Rng rng(derive_seed(kStyleTag, {static_cast<std::uint64_t>(style_class)}));
  const double hue = 0.13 + 0.381966 * style_class;
  Palette p;
  p.wall = hsv(hue, rng.uniform(0.45, 0.8), rng.uniform(0.55, 0.9));
  p.floor = hsv(hue + rng.uniform(0.25, 0.75), rng.uniform(0.2, 0.6), rng.uniform(0.25, 0.55));
  p.ceiling = hsv(hue + rng.uniform(-0.2, 0.2), rng.uniform(0.05, 0.3), rng.uniform(0.6, 0.95));
  return p;
}

TextureKind class_texture(int style_class) {
  return static_cast<TextureKind>(style_class % 4);
}

WorldSpec generate_world(std::uint64_t seed, const WorldGenConfig& config) {
  config.validate();
  Rng rng(derive_seed(seed, {kGenTag}));
  const int target = config.min_rooms +
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(
                         config.max_rooms - config.min_rooms + 1)));
  std::vector<CellRect> leaves;
  for (int attempt = 0; attempt < 64; ++attempt) {
    leaves = partition(config, target, rng);
    if (static_cast<int>(leaves.size()) >= config.min_rooms) break;
  }
  if (static_cast<int>(leaves.size()) < config.min_rooms) {
    throw ConfigError("world: could not place the minimum number of rooms");
  }

  WorldSpec w;
  w.seed = seed;
  w.width = config.width;
  w.height = config.height;
  w.num_style_classes = config.num_style_classes;
  w.cells.assign(static_cast<std::size_t>(w.width * w.height), GridCell{});
  for (int r = 0; r < static_cast<int>(leaves.size()); ++r) {
    const CellRect& b = leaves[static_cast<std::size_t>(r)];
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) {
        w.cells[static_cast<std::size_t>(y * w.width + x)] = {false, r};
      }
    }
    Room room;
    room.bounds = b;
    w.rooms.push_back(room);
  }

  // Doors: a random spanning tree over adjacent rooms plus occasional loops.
  auto adj = find_adjacencies(leaves);
  for (std::size_t i = adj.size(); i > 1; --i) std::swap(adj[i - 1], adj[rng.below(i)]);
  std::vector<int> parent(leaves.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const Adjacency& e : adj) {
    const int ra = find_root(parent, e.a), rb = find_root(parent, e.b);
    const bool tree_edge = ra != rb;
    if (!tree_edge && !rng.bernoulli(config.extra_door_prob)) continue;
    if (tree_edge) parent[static_cast<std::size_t>(ra)] = rb;
    const int along = e.lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(e.hi - e.lo)));
    const Cell door = e.vertical_wall ? Cell{e.wall, along} : Cell{along, e.wall};
    w.cells[static_cast<std::size_t>(door.y * w.width + door.x)] = {false, std::min(e.a, e.b)};
  }

  for (Room& room : w.rooms) {
    const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.num_style_classes)));
    assign_style(room, cls, config.palette_jitter, rng);
  }

  if (count_free_components(w) != 1) {
    throw Error("world: generated layout is disconnected (seed " + std::to_string(seed) + ")");
  }
  return w;
}

WorldSpec world_from_layout(const std::vector<std::string>& rows,
                            std::vector<int> style_classes, int num_style_classes) {
  if (rows.empty() || rows[0].empty()) throw ConfigError("layout: empty");
  if (num_style_classes < 2) throw ConfigError("layout: need at least 2 style classes");
  WorldSpec w;
  w.height = static_cast<int>(rows.size());
  w.width = static_cast<int>(rows[0].size());
  w.num_style_classes = num_style_classes;
  w.cells.assign(static_cast<std::size_t>(w.width * w.height), GridCell{});
  int max_room = -1;
  for (int y = 0; y < w.height; ++y) {
    if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != w.width) {
      throw ConfigError("layout: ragged rows");
    }
    for (int x = 0; x < w.width; ++x) {
      const char ch = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      int id;
      if (ch == '#') {
        continue;
      } else if (ch >= '0' && ch <= '9') {
        id = ch - '0';
      } else if (ch >= 'a' && ch <= 'z') {
        id = 10 + (ch - 'a');
      } else {
        throw ConfigError(std::string("layout: unknown cell character '") + ch + "'");
      }
      w.cells[static_cast<std::size_t>(y * w.width + x)] = {false, id};
      max_room = std::max(max_room, id);
    }
  }
  if (max_room < 0) throw ConfigError("layout: no free cells");
  w.rooms.resize(static_cast<std::size_t>(max_room + 1));
  std::vector<bool> seen(w.rooms.size(), false);
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      const GridCell& c = w.cells[static_cast<std::size_t>(y * w.width + x)];
      if (c.wall) continue;
      CellRect& b = w.rooms[static_cast<std::size_t>(c.room)].bounds;
      if (!seen[static_cast<std::size_t>(c.room)]) {
        b = {x, y, x + 1, y + 1};
        seen[static_cast<std::size_t>(c.room)] = true;
      } else {
        b = {std::min(b.x0, x), std::min(b.y0, y), std::max(b.x1, x + 1), std::max(b.y1, y + 1)};
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ConfigError("layout: room ids must be contiguous from 0");
  }
  style_classes.resize(w.rooms.size(), -1);
  Rng rng(0);
  for (std::size_t r = 0; r < w.rooms.size(); ++r) {
    int cls = style_classes[r] >= 0 ? style_classes[r] : static_cast<int>(r) % num_style_classes;
    if (cls >= num_style_classes) throw ConfigError("layout: style class out of range");
    assign_style(w.rooms[r], cls, 0.0f, rng);
  }
  return w;
}

int count_free_components(const WorldSpec& world) {
  std::vector<int> label(world.cells.size(), -1);
  int components = 0;
  for (std::size_t i = 0; i < world.cells.size(); ++i) {
    if (world.cells[i].wall || label[i] >= 0) continue;
    const int x0 = static_cast<int>(i) % world.width, y0 = static_cast<int>(i) / world.width;
    label[i] = components;
    std::deque<Cell> queue = {{x0, y0}};
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
        const Cell n{c.x + d.x, c.y + d.y};
        if (!world.is_free(n)) continue;
        const auto idx = static_cast<std::size_t>(n.y * world.width + n.x);
        if (label[idx] >= 0) continue;
        label[idx] = components;
        queue.push_back(n);
      }
    }
    ++components;
  }
  return components;
}

std::vector<int> distance_field(const WorldSpec& world, const std::vector<Cell>& sources) {
  std::vector<int> dist(world.cells.size(), -1);
  std::deque<Cell> queue;
  for (const Cell s : sources) {
    if (!world.is_free(s)) continue;
    const auto idx = static_cast<std::size_t>(s.y * world.width + s.x);
    if (dist[idx] == 0) continue;
    dist[idx] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int dc = dist[static_cast<std::size_t>(c.y * world.width + c.x)];
    for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (!world.is_free(n)) continue;
      const auto idx = static_cast<std::size_t>(n.y * world.width + n.x);
      if (dist[idx] >= 0) continue;
      dist[idx] = dc + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

int shortest_path_len(const WorldSpec& world, Cell from, Cell to) {
  if (!world.is_free(from) || !world.is_free(to)) {
    throw ConfigError("shortest_path_len: endpoints must be free cells");
  }
  const auto dist = distance_field(world, {from});
  const int d = dist[static_cast<std::size_t>(to.y * world.width + to.x)];
  if (d < 0) throw UnreachableError("shortest_path_len: no path between cells");
  return d;
}

std::uint64_t world_hash(const WorldSpec& world) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_bytes(h, world.seed);
  hash_bytes(h, world.width);
  hash_bytes(h, world.height);
  hash_bytes(h, world.num_style_classes);
  for (const GridCell& c : world.cells) {
    hash_bytes(h, c.wall);
    hash_bytes(h, c.room);
  }
  for (const Room& r : world.rooms) {
    hash_bytes(h, r.bounds);
    hash_bytes(h, r.style_class);
    hash_bytes(h, r.palette);
    hash_bytes(h, r.texture);
    hash_bytes(h, r.texture_seed);
  }
  return h;
}

}  // namespace crl::world
