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

#include "crl/worldsim/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "crl/common/error.hpp"
#include "crl/common/rng.hpp"

namespace crl::world {

namespace {

struct Hit {
  double perp = 1.0;  // perpendicular distance to the wall face
  double u = 0.0;     // horizontal face coordinate in [0, 1)
  int room = -1;      // room of the last free cell before the wall
};

Hit cast_ray(const WorldSpec& world, double px, double py, double rx, double ry, int start_room) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int mx = static_cast<int>(std::floor(px));
  int my = static_cast<int>(std::floor(py));
  const double ddx = rx == 0.0 ? kInf : std::abs(1.0 / rx);
  const double ddy = ry == 0.0 ? kInf : std::abs(1.0 / ry);
  const int sx = rx < 0 ? -1 : 1;
  const int sy = ry < 0 ? -1 : 1;
  double side_x = rx < 0 ? (px - mx) * ddx : (mx + 1.0 - px) * ddx;
  double side_y = ry < 0 ? (py - my) * ddy : (my + 1.0 - py) * ddy;
  Hit hit;
  hit.room = start_room;
  const int max_steps = 2 * (world.width + world.height) + 4;
  for (int i = 0; i < max_steps; ++i) {
    bool x_side;
    if (side_x < side_y) {
      side_x += ddx;
      mx += sx;
      x_side = true;
    } else {
      side_y += ddy;
      my += sy;
      x_side = false;
    }
    const Cell c{mx, my};
    if (!world.is_free(c)) {
      hit.perp = x_side ? side_x - ddx : side_y - ddy;
      const double along = x_side ? py + hit.perp * ry : px + hit.perp * rx;
      hit.u = along - std::floor(along);
      return hit;
    }
    hit.room = world.at(c).room;
  }
  // Open layouts without a bounding wall: treat the horizon as a far wall.
  hit.perp = static_cast<double>(world.width + world.height);
  return hit;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::string ppm_header(int w, int h) {
  return "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

float texture_value(TextureKind kind, std::uint64_t texture_seed, float u, float v) {
  switch (kind) {
    case TextureKind::kSolid:
      return 1.0f;
    case TextureKind::kChecker: {
      const int a = static_cast<int>(u * 4.0f), b = static_cast<int>(v * 4.0f);
      return ((a + b) & 1) ? 0.6f : 1.0f;
    }
    case TextureKind::kStripe:
      return (static_cast<int>(v * 6.0f) & 1) ? 0.6f : 1.0f;
    case TextureKind::kNoise: {
      const auto a = static_cast<std::uint64_t>(u * 6.0f), b = static_cast<std::uint64_t>(v * 6.0f);
      const std::uint64_t h = mix64(texture_seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b << 32));
      return 0.55f + 0.45f * static_cast<float>(h >> 40) / static_cast<float>(1u << 24);
    }
  }
  return 1.0f;
}

void render_into(const WorldSpec& world, const AgentState& state, const RenderConfig& cfg,
                 float* chw) {
  const int H = cfg.height, W = cfg.width;
  const std::size_t plane = static_cast<std::size_t>(H * W);
  const Cell d = heading_delta(state.heading);
  const double dx = d.x, dy = d.y;
  // Camera plane points to the agent's right; length 1 gives a 90 degree FOV.
  const double cx = -dy, cy = dx;
  const double px = state.x(), py = state.y();
  const int here = world.at(state.cell).room;
  const Room* current = here >= 0 ? &world.rooms[static_cast<std::size_t>(here)] : nullptr;
  const Rgb floor = current ? current->palette.floor : Rgb{0.3f, 0.3f, 0.3f};
  const Rgb ceiling = current ? current->palette.ceiling : Rgb{0.7f, 0.7f, 0.7f};
  const float half = 0.5f * static_cast<float>(H);

  // Floor and ceiling darkening depends only on the row.
  std::vector<float> row_shade(static_cast<std::size_t>(H));
  for (int y = 0; y < H; ++y) {
    const float p = std::abs(static_cast<float>(y) + 0.5f - half);
    const float dist = half / p;
    row_shade[static_cast<std::size_t>(y)] = 1.0f / (1.0f + cfg.distance_falloff * dist);
  }

  for (int col = 0; col < W; ++col) {
    const double cam = 2.0 * (col + 0.5) / W - 1.0;
    const Hit hit = cast_ray(world, px, py, dx + cx * cam, dy + cy * cam, here);
    const Room* room = hit.room >= 0 ? &world.rooms[static_cast<std::size_t>(hit.room)] : nullptr;
    const Rgb wall = room ? room->palette.wall : Rgb{0.5f, 0.5f, 0.5f};
    const float shade = 1.0f / (1.0f + cfg.distance_falloff * static_cast<float>(hit.perp));
    const float line = static_cast<float>(H / std::max(hit.perp, 1e-6));
    const float top = half - 0.5f * line;
    for (int y = 0; y < H; ++y) {
      const float yc = static_cast<float>(y) + 0.5f;
      Rgb c;
      float s;
      if (yc >= top && yc < top + line) {
        const float v = std::clamp((yc - top) / line, 0.0f, 0.999999f);
        s = shade * (room ? texture_value(room->texture, room->texture_seed,
                                          static_cast<float>(hit.u), v)
                          : 1.0f);
        c = wall;
      } else if (yc < half) {
        s = row_shade[static_cast<std::size_t>(y)];
        c = ceiling;
      } else {
        s = row_shade[static_cast<std::size_t>(y)];
        c = floor;
      }
      const std::size_t idx = static_cast<std::size_t>(y * W + col);
      for (int ch = 0; ch < 3; ++ch) {
        chw[static_cast<std::size_t>(ch) * plane + idx] = std::clamp(c[static_cast<std::size_t>(ch)] * s, 0.0f, 1.0f);
      }
    }
  }
}

Observation render(const WorldSpec& world, const AgentState& state, const RenderConfig& cfg) {
  if (cfg.height < 1 || cfg.width < 1) throw ConfigError("render: image size must be positive");
  Observation obs(cfg.height, cfg.width);
  render_into(world, state, cfg, obs.pixels.data());
  return obs;
}

std::string encode_ppm(const Observation& obs) {
  std::string out = ppm_header(obs.width, obs.height);
  out.reserve(out.size() + static_cast<std::size_t>(3 * obs.width * obs.height));
  for (int y = 0; y < obs.height; ++y) {
    for (int x = 0; x < obs.width; ++x) {
      for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(to_byte(obs.at(c, y, x))));
    }
  }
  return out;
}

std::string encode_map_ppm(const WorldSpec& world, const AgentState* agent,
                           const VisitMap* visits, int scale) {
  if (scale < 1) throw ConfigError("map export: scale must be positive");
  Observation img(world.height * scale, world.width * scale);
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      const GridCell& g = world.at({x, y});
      Rgb c{0.0f, 0.0f, 0.0f};
      if (!g.wall) {
        c = world.rooms[static_cast<std::size_t>(g.room)].palette.wall;
        const bool seen = visits && visits->visited({x, y});
        for (float& v : c) v = seen ? 0.5f + 0.5f * v : 0.6f * v;
      }
      if (agent && agent->cell == Cell{x, y}) c = {1.0f, 1.0f, 1.0f};
      for (int sy = 0; sy < scale; ++sy) {
        for (int sx = 0; sx < scale; ++sx) {
          for (int ch = 0; ch < 3; ++ch) {
            img.at(ch, y * scale + sy, x * scale + sx) = c[static_cast<std::size_t>(ch)];
          }
        }
      }
    }
  }
  return encode_ppm(img);
}

Observation tile_observations(const std::vector<Observation>& images, int cols) {
  if (images.empty() || cols < 1) throw ConfigError("tile: need images and a positive column count");
  const int h = images[0].height, w = images[0].width;
  const int n = static_cast<int>(images.size());
  const int rows = (n + cols - 1) / cols;
  Observation out(rows * h, std::min(n, cols) * w);
  for (int i = 0; i < n; ++i) {
    const Observation& im = images[static_cast<std::size_t>(i)];
    if (im.height != h || im.width != w) throw ShapeError("tile: images differ in size");
    const int oy = (i / cols) * h, ox = (i % cols) * w;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(c, oy + y, ox + x) = im.at(c, y, x);
      }
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IOError("cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IOError("short write to " + path);
}

}  // namespace crl::world
