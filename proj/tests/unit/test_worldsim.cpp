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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "crl/common/error.hpp"
#include "crl/worldsim/env.hpp"

using namespace crl;
using namespace crl::world;

namespace {

const std::vector<std::string> kTwoRooms = {
    "#######",
    "#000#1#",
    "#00011#",
    "#######",
};

// 5x5 single-colour room with the agent at its center.
const std::vector<std::string> kSquareRoom = {
    "#######",
    "#00000#",
    "#00000#",
    "#00000#",
    "#00000#",
    "#00000#",
    "#######",
};

AgentState at(int x, int y, Heading h) {
  AgentState s;
  s.cell = {x, y};
  s.heading = h;
  return s;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const WorldGenConfig cfg;
  const WorldSpec a = generate_world(7, cfg);
  const WorldSpec b = generate_world(7, cfg);
  CHECK(a == b);
  CHECK(world_hash(a) == world_hash(b));
  const WorldSpec c = generate_world(8, cfg);
  CHECK(a.cells != c.cells);
}

TEST_CASE("generated worlds satisfy the structural invariants") {
  const WorldGenConfig cfg;
  std::set<std::uint64_t> hashes;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const WorldSpec w = generate_world(seed, cfg);
    INFO("seed " << seed);
    REQUIRE(count_free_components(w) == 1);
    CHECK(w.rooms.size() >= 4);
    CHECK(w.rooms.size() <= 12);
    for (int y = 0; y < w.height; ++y) {
      for (int x = 0; x < w.width; ++x) {
        const GridCell& g = w.at({x, y});
        if (x == 0 || y == 0 || x == w.width - 1 || y == w.height - 1) CHECK(g.wall);
        if (g.wall) {
          CHECK(g.room == -1);
        } else {
          CHECK(g.room >= 0);
          CHECK(g.room < static_cast<int>(w.rooms.size()));
        }
      }
    }
    for (const Room& r : w.rooms) {
      CHECK(r.style_class >= 0);
      CHECK(r.style_class < cfg.num_style_classes);
      CHECK(r.bounds.width() >= cfg.min_room_side);
      CHECK(r.bounds.height() >= cfg.min_room_side);
      for (const Rgb* c : {&r.palette.wall, &r.palette.floor, &r.palette.ceiling}) {
        for (float v : *c) {
          CHECK(v >= 0.0f);
          CHECK(v <= 1.0f);
        }
      }
    }
    hashes.insert(world_hash(w));
  }
  CHECK(hashes.size() == 200);
}

TEST_CASE("small grids and bad configs are rejected") {
  WorldGenConfig cfg;
  cfg.width = 7;
  CHECK_THROWS_AS(generate_world(1, cfg), ConfigError);
  cfg = {};
  cfg.num_style_classes = 1;
  CHECK_THROWS_AS(generate_world(1, cfg), ConfigError);
  cfg = {};
  cfg.width = cfg.height = 8;
  cfg.min_rooms = cfg.max_rooms = 12;
  CHECK_THROWS_AS(generate_world(1, cfg), ConfigError);
  cfg.min_rooms = 1;
  cfg.max_rooms = 4;
  const WorldSpec w = generate_world(3, cfg);
  CHECK(count_free_components(w) == 1);
}

TEST_CASE("reset spawns on free cells deterministically") {
  const WorldSpec w = generate_world(5, {});
  Rng r1(9), r2(9);
  CHECK(reset_agent(w, r1) == reset_agent(w, r2));
  Rng rng(10);
  std::set<int> headings;
  for (int i = 0; i < 1000; ++i) {
    VisitMap visits;
    const AgentState s = reset_agent(w, rng, &visits);
    CHECK(w.is_free(s.cell));
    CHECK(s.steps_taken == 0);
    CHECK(visits.tiles_explored() == 1);
    headings.insert(static_cast<int>(s.heading));
  }
  CHECK(headings.size() == 4);
}

TEST_CASE("resets on a two-room world sample both rooms") {
  const WorldSpec w = world_from_layout(kTwoRooms);
  Rng rng(4);
  std::set<int> rooms;
  for (int i = 0; i < 1000; ++i) rooms.insert(w.at(reset_agent(w, rng).cell).room);
  // Each room holds at least 3 of 8 free cells, so missing one has
  // probability below 2 * (5/8)^1000.
  CHECK(rooms == std::set<int>{0, 1});
}

TEST_CASE("step collision and turning rules") {
  const WorldSpec w = world_from_layout(kTwoRooms);
  VisitMap visits(w.width, w.height);
  const AgentState s = at(1, 1, Heading::kNorth);
  auto out = step_agent(w, s, Action::kForward, 200, &visits);
  CHECK(out.state.cell == s.cell);
  CHECK(out.state.steps_taken == 1);
  CHECK_FALSE(out.moved);

  out = step_agent(w, at(1, 1, Heading::kEast), Action::kForward, 200);
  CHECK(out.state.cell == Cell{2, 1});
  CHECK(out.moved);

  for (int h = 0; h < 4; ++h) {
    const auto heading = static_cast<Heading>(h);
    CHECK(turn_right(turn_left(heading)) == heading);
    CHECK(turn_left(turn_left(turn_left(turn_left(heading)))) == heading);
    AgentState t = at(2, 2, heading);
    for (int i = 0; i < 4; ++i) t = step_agent(w, t, Action::kTurnLeft, 200).state;
    CHECK(t.heading == heading);
    CHECK(t.steps_taken == 4);
  }

  AgentState t = at(1, 1, Heading::kEast);
  bool done = false;
  for (int i = 0; i < 5; ++i) {
    const auto o = step_agent(w, t, Action::kTurnLeft, 5);
    t = o.state;
    done = o.done;
    if (i < 4) CHECK_FALSE(done);
  }
  CHECK(done);
  CHECK_FALSE(step_agent(w, at(1, 1, Heading::kEast), Action::kTurnLeft, 0).done);
}

TEST_CASE("tiles explored counts distinct cells") {
  const WorldSpec w = world_from_layout({"#######", "#00000#", "#######"});
  Rng rng(1);
  VisitMap visits;
  AgentState s = reset_agent(w, rng, &visits);
  CHECK(visits.tiles_explored() == 1);

  s = at(1, 1, Heading::kEast);
  visits.reset(w.width, w.height);
  visits.visit(s.cell);
  for (int i = 0; i < 2; ++i) s = step_agent(w, s, Action::kForward, 0, &visits).state;
  CHECK(visits.tiles_explored() == 3);

  s = at(1, 1, Heading::kEast);
  visits.reset(w.width, w.height);
  visits.visit(s.cell);
  for (int i = 0; i < 100; ++i) {
    s = step_agent(w, s, Action::kForward, 0, &visits).state;
    s.heading = s.heading == Heading::kEast ? Heading::kWest : Heading::kEast;
  }
  CHECK(visits.tiles_explored() == 2);
  CHECK(visits.count({1, 1}) + visits.count({2, 1}) == 101);
  CHECK(visits.visited_cells().size() == 2);
}

TEST_CASE("shortest path lengths") {
  const WorldSpec corridor = world_from_layout({"#######", "#00000#", "#######"});
  CHECK(shortest_path_len(corridor, {1, 1}, {5, 1}) == 4);
  CHECK(shortest_path_len(corridor, {2, 1}, {3, 1}) == 1);
  CHECK(shortest_path_len(corridor, {2, 1}, {2, 1}) == 0);
  CHECK_THROWS_AS(shortest_path_len(corridor, {0, 0}, {2, 1}), ConfigError);
  const WorldSpec split = world_from_layout({"#####", "#0#1#", "#####"});
  CHECK_THROWS_AS(shortest_path_len(split, {1, 1}, {3, 1}), UnreachableError);
  CHECK(count_free_components(split) == 2);
  const auto field = distance_field(corridor, {{1, 1}, {5, 1}});
  CHECK(field[1 * 7 + 3] == 2);
  CHECK(field[0] == -1);
}

TEST_CASE("style class of the containing room") {
  const WorldSpec w = world_from_layout(kTwoRooms, {5, 3});
  for (int h = 0; h < 4; ++h) {
    CHECK(style_class_at(w, at(5, 2, static_cast<Heading>(h))) == 3);
    CHECK(style_class_at(w, at(1, 1, static_cast<Heading>(h))) == 5);
  }
  EnvConfig cfg;
  Env env(cfg, 3);
  for (int t = 0; t < 200; ++t) {
    const int c = env.style_class();
    CHECK(c >= 0);
    CHECK(c < cfg.world.num_style_classes);
    env.step(static_cast<Action>(t % 3));
  }
}

TEST_CASE("facing a wall one cell away fills the center column") {
  const WorldSpec w = world_from_layout(kSquareRoom);
  const Room& room = w.rooms[0];
  REQUIRE(room.texture == TextureKind::kSolid);
  const RenderConfig cfg;
  const Observation obs = render(w, at(3, 1, Heading::kNorth), cfg);
  for (int col : {cfg.width / 2 - 1, cfg.width / 2}) {
    const float ratio = obs.at(0, 0, col) / room.palette.wall[0];
    CHECK(ratio > 0.0f);
    CHECK(ratio <= 1.0f);
    for (int y = 0; y < cfg.height; ++y) {
      for (int c = 0; c < 3; ++c) {
        CHECK(obs.at(c, y, col) == doctest::Approx(room.palette.wall[static_cast<std::size_t>(c)] * ratio).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("rendering is deterministic and bounded") {
  const WorldSpec w = generate_world(11, {});
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    AgentState s = reset_agent(w, rng);
    const Observation a = render(w, s);
    const Observation b = render(w, s);
    REQUIRE(a.pixels.size() == 3u * 32u * 32u);
    CHECK(a == b);
    for (float v : a.pixels) {
      REQUIRE(std::isfinite(v));
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
  }
}

TEST_CASE("rotating in a symmetric room preserves column histograms") {
  const WorldSpec w = world_from_layout(kSquareRoom);
  const RenderConfig cfg;
  const Observation base = render(w, at(3, 3, Heading::kNorth), cfg);
  for (Heading h : {Heading::kEast, Heading::kSouth, Heading::kWest}) {
    const Observation rot = render(w, at(3, 3, h), cfg);
    for (int col = 0; col < cfg.width; ++col) {
      for (int c = 0; c < 3; ++c) {
        std::vector<float> a, b;
        for (int y = 0; y < cfg.height; ++y) {
          a.push_back(base.at(c, y, col));
          b.push_back(rot.at(c, y, col));
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("textures stay in range") {
  for (int k = 0; k < 4; ++k) {
    for (float u = 0.0f; u < 1.0f; u += 0.07f) {
      for (float v = 0.0f; v < 1.0f; v += 0.07f) {
        const float t = texture_value(static_cast<TextureKind>(k), 99, u, v);
        CHECK(t > 0.0f);
        CHECK(t <= 1.0f);
      }
    }
  }
  CHECK(texture_value(TextureKind::kNoise, 1, 0.1f, 0.1f) == texture_value(TextureKind::kNoise, 1, 0.1f, 0.1f));
}

TEST_CASE("PPM export") {
  Observation o(2, 3);
  o.at(0, 0, 0) = 1.0f;
  const std::string ppm = encode_ppm(o);
  CHECK(ppm.rfind("P6\n3 2\n255\n", 0) == 0);
  CHECK(ppm.size() == 11 + 18);
  CHECK(static_cast<unsigned char>(ppm[11]) == 255);
  const WorldSpec w = world_from_layout(kTwoRooms);
  const std::string map = encode_map_ppm(w, nullptr, nullptr, 2);
  CHECK(map.rfind("P6\n14 8\n255\n", 0) == 0);
  const Observation grid = tile_observations({o, o, o}, 2);
  CHECK(grid.height == 4);
  CHECK(grid.width == 6);
}

TEST_CASE("env episodes and tasks") {
  EnvConfig cfg;
  cfg.episode_length = 50;
  Env a(cfg, 17), b(cfg, 17);
  CHECK(a.observation() == b.observation());
  int dones = 0;
  for (int t = 0; t < 120; ++t) {
    const auto act = static_cast<Action>((t * 7) % 3);
    const StepResult ra = a.step(act);
    const StepResult rb = b.step(act);
    CHECK(ra.done == rb.done);
    CHECK(a.state() == b.state());
    CHECK(a.observation() == b.observation());
    if (ra.done) {
      ++dones;
      REQUIRE(ra.episode);
      CHECK(ra.episode->steps == 50);
      CHECK(ra.episode->tiles_explored >= 1);
      a.reset();
      b.reset();
    }
  }
  CHECK(dones == 2);

  cfg.task = TaskKind::kStyleGoal;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Env env(cfg, seed);
    const auto f = env.goal_features();
    REQUIRE(f.size() == 8u);
    CHECK(std::count(f.begin(), f.end(), 1.0f) == 1);
    CHECK(env.task().target_class >= 0);
  }
  cfg.task = TaskKind::kPointGoal;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Env env(cfg, seed);
    CHECK(env.goal_distance() > 1);
    CHECK(env.goal_features().size() == 3u);
  }
  cfg.task = TaskKind::kImageGoal;
  Env img(cfg, 4);
  CHECK(img.task().goal_obs.size() == 3u * 32u * 32u);
}

TEST_CASE("point goal features and progress reward") {
  EnvConfig cfg;
  cfg.fixed_world = std::make_shared<const WorldSpec>(world_from_layout({"#######", "#00000#", "#######"}));
  cfg.fixed_spawn = Cell{1, 1};
  cfg.fixed_heading = Heading::kEast;
  cfg.fixed_goal = Cell{5, 1};
  cfg.task = TaskKind::kPointGoal;
  cfg.success_radius = 0.0f;
  Env env(cfg, 1);
  CHECK(env.goal_distance() == 4);
  auto f = env.goal_features();
  CHECK(f[0] == doctest::Approx(4.0f / 16.0f));
  CHECK(f[1] == doctest::Approx(0.0f));
  StepResult r = env.step(Action::kForward);
  CHECK(r.reward == doctest::Approx(1.0f - 0.01f));
  env.step(Action::kTurnRight);
  f = env.goal_features();
  CHECK(f[0] == doctest::Approx(0.0f));
  CHECK(f[1] == doctest::Approx(-3.0f / 16.0f));
  env.step(Action::kTurnLeft);
  env.step(Action::kForward);
  env.step(Action::kForward);
  r = env.step(Action::kForward);
  CHECK(r.success);
  CHECK(r.done);
  REQUIRE(r.episode);
  CHECK(r.episode->initial_distance == 4);
  CHECK(r.episode->final_distance == 0);
  CHECK(r.episode->path_length == 4);
  CHECK(r.reward == doctest::Approx(1.0f - 0.01f + 2.5f));
}

TEST_CASE("success radius covering the world succeeds on the first step") {
  EnvConfig cfg;
  cfg.task = TaskKind::kPointGoal;
  cfg.success_radius = 1000.0f;
  Env env(cfg, 2);
  const StepResult r = env.step(Action::kTurnLeft);
  CHECK(r.success);
  CHECK(r.done);
}

TEST_CASE("biological mode never terminates and keeps its visit map") {
  EnvConfig cfg;
  cfg.infinite_episode = true;
  Env env(cfg, 6);
  int tiles = env.visits().tiles_explored();
  for (int t = 0; t < 1000; ++t) {
    const StepResult r = env.step(static_cast<Action>((t / 3) % 3 == 0 ? 1 : 0));
    REQUIRE_FALSE(r.done);
    CHECK(env.visits().tiles_explored() >= tiles);
    tiles = env.visits().tiles_explored();
  }
  CHECK(env.state().steps_taken == 1000);
}

TEST_CASE("vectorized stepping matches sequential envs") {
  EnvConfig cfg;
  cfg.episode_length = 30;
  VecEnv vec(cfg, 3, 77);
  std::vector<Env> solo;
  for (int i = 0; i < 3; ++i) solo.emplace_back(cfg, derive_seed(77, {static_cast<std::uint64_t>(i)}));
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<Action> acts;
    for (int i = 0; i < 3; ++i) acts.push_back(static_cast<Action>(rng.below(3)));
    vec.step(acts);
    for (int i = 0; i < 3; ++i) {
      if (solo[static_cast<std::size_t>(i)].step(acts[static_cast<std::size_t>(i)]).done) {
        solo[static_cast<std::size_t>(i)].reset();
      }
      CHECK(vec.env(i).state() == solo[static_cast<std::size_t>(i)].state());
      CHECK(vec.env(i).observation() == solo[static_cast<std::size_t>(i)].observation());
    }
  }
}

TEST_CASE("seed ranges are disjoint") {
  CHECK_FALSE(kPretrainWorlds.overlaps(kHeldOutWorlds));
  EnvConfig cfg;
  cfg.world_seeds = kHeldOutWorlds;
  Env env(cfg, 1);
  CHECK(kHeldOutWorlds.contains(env.world().seed));
}
