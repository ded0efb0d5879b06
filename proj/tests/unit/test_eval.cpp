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

#include "doctest.h"

#include "crl/common/error.hpp"
#include "crl/eval/diversity.hpp"
#include "crl/eval/metrics.hpp"
#include "crl/eval/nav.hpp"
#include "crl/eval/probe.hpp"

using namespace crl;
using namespace crl::eval;

namespace {

ProbeConfig small_probe() {
  ProbeConfig p;
  p.world.width = 24;
  p.world.height = 24;
  p.world.min_rooms = 3;
  p.world.max_rooms = 6;
  p.num_worlds = 12;
  p.samples_per_world = 30;
  return p;
}

std::vector<float> one_hot_features(const std::vector<int>& y, int k) {
  std::vector<float> x(y.size() * static_cast<std::size_t>(k), 0.0f);
  for (std::size_t i = 0; i < y.size(); ++i) x[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(y[i])] = 1.0f;
  return x;
}

}  // namespace

TEST_CASE("SPL") {
  CHECK(spl(true, 10, 10) == 1.0);
  CHECK(spl(false, 10, 10) == 0.0);
  CHECK(spl(true, 10, 20) == doctest::Approx(0.5));
  CHECK(spl(true, 10, 5) == 1.0);
  CHECK(spl(true, 0, 3) == 1.0);
}

TEST_CASE("SoftSPL") {
  CHECK(soft_spl(8, 0, 8, 8) == 1.0);
  CHECK(soft_spl(8, 8, 8, 0) == 0.0);
  CHECK(soft_spl(8, 4, 8, 4) == doctest::Approx(0.5));
  CHECK(soft_spl(8, 4, 8, 16) == doctest::Approx(0.25));
  CHECK(soft_spl(8, 12, 8, 16) == 0.0);
  CHECK_THROWS_AS(soft_spl(0, 0, 0, 0), DegenerateError);
}

TEST_CASE("episode metrics obey SPL bounds") {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    world::EpisodeSummary e;
    e.initial_distance = 1 + static_cast<int>(rng.below(30));
    e.final_distance = static_cast<int>(rng.below(40));
    e.success = e.final_distance <= 1;
    e.path_length = static_cast<int>(rng.below(100));
    const NavMetrics m = nav_metrics(e);
    CHECK(m.spl <= m.success);
    CHECK(m.spl <= 1.0);
    CHECK(m.soft_spl >= 0.0);
    CHECK(m.soft_spl <= 1.0);
    CHECK(m.goal_distance >= 0.0);
  }
}

TEST_CASE("mean and standard error") {
  const MeanStderr m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(mean_stderr({3.0}).se == 0.0);
}

TEST_CASE("probe data comes from held-out worlds only") {
  ProbeConfig p = small_probe();
  p.worlds = world::SeedRange{5, 100};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  const ProbeData d = collect_probe_data(small_probe(), 3);
  CHECK(d.size() == 12 * 30);
  CHECK(d.frames.size() == d.size() * 3 * 32 * 32);
  for (int y : d.labels) CHECK((y >= 0 && y < 8));
  const ProbeData again = collect_probe_data(small_probe(), 3);
  CHECK(again.frames == d.frames);
}

TEST_CASE("linear probe on one-hot oracle features is near perfect") {
  Rng rng(2);
  std::vector<int> ty(400), vy(200);
  for (int& y : ty) y = static_cast<int>(rng.below(8));
  for (int& y : vy) y = static_cast<int>(rng.below(8));
  const ProbeResult r =
      train_linear_probe(one_hot_features(ty, 8), ty, one_hot_features(vy, 8), vy, 8, 8, small_probe(), 4);
  CHECK(r.top1 >= 0.99);
  CHECK(r.train_size == 400);
  CHECK(r.val_size == 200);
}

TEST_CASE("linear probe with shuffled labels sits at chance") {
  Rng rng(3);
  const std::size_t d = 16;
  std::vector<int> ty(2000), vy(2000);
  for (int& y : ty) y = static_cast<int>(rng.below(8));
  for (int& y : vy) y = static_cast<int>(rng.below(8));
  std::vector<float> tx(ty.size() * d), vx(vy.size() * d);
  for (float& x : tx) x = static_cast<float>(rng.normal());
  for (float& x : vx) x = static_cast<float>(rng.normal());
  const ProbeResult r = train_linear_probe(tx, ty, vx, vy, d, 8, small_probe(), 5);
  MESSAGE("chance-level probe accuracy " << r.top1);
  CHECK(std::fabs(r.top1 - 0.125) < 0.05);
}

TEST_CASE("linear probe on frozen random encoder runs end to end") {
  const ProbeConfig p = small_probe();
  const ProbeData d = collect_probe_data(p, 6);
  const explore::EncoderWeights w = random_encoder(nn::EncoderConfig{}, 7);
  const ProbeResult r = linear_probe(w.params, w.config, d, p, 8);
  MESSAGE("random-encoder probe accuracy " << r.top1);
  CHECK(r.val_size == 3 * 30);
  CHECK(r.train_size == 9 * 30);
  CHECK(r.top1 >= 0.0);
  CHECK(r.top1 <= 1.0);
  CHECK(r.per_class.size() == 8);
}

TEST_CASE("diversity") {
  const DiversityEmbedding e = make_diversity_embedding();
  Rng rng(9);
  std::vector<std::vector<float>> imgs(6, std::vector<float>(3 * 32 * 32));
  for (auto& img : imgs) {
    for (float& v : img) v = static_cast<float>(rng.uniform());
  }
  std::vector<const float*> same(5, imgs[0].data());
  CHECK(diversity(same, 32, 32, e).mean == 0.0);

  std::vector<const float*> batch;
  for (const auto& img : imgs) batch.push_back(img.data());
  const DiversityScore a = diversity(batch, 32, 32, e);
  CHECK(a.mean > 0.0);
  CHECK(a.pairs == 15);
  std::reverse(batch.begin(), batch.end());
  std::swap(batch[1], batch[4]);
  CHECK(diversity(batch, 32, 32, e).mean == doctest::Approx(a.mean).epsilon(1e-9));
  CHECK_THROWS_AS(diversity({imgs[0].data()}, 32, 32, e), BatchError);
}

TEST_CASE("exploration curve aggregates seeds") {
  std::vector<explore::PretrainResult> runs(2);
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 3; ++i) {
      explore::IterationMetrics m;
      m.frames = static_cast<std::uint64_t>(i + 1) * 100;
      m.tiles_explored = 10.0 * (i + 1) + s * 2.0;
      runs[static_cast<std::size_t>(s)].metrics.push_back(m);
    }
  }
  const auto c = exploration_curve(runs);
  REQUIRE(c.size() == 3);
  CHECK(c[1].frames == 200);
  CHECK(c[1].mean == doctest::Approx(21.0));
  CHECK(c[1].se == doctest::Approx(1.0));
}

TEST_CASE("random policy in a one-cell world explores one tile") {
  explore::PretrainConfig c;
  c.method = explore::Method::kRandom;
  c.env.fixed_world = std::make_shared<const world::WorldSpec>(world::world_from_layout({"###", "#0#", "###"}));
  c.ppo.num_envs = 2;
  c.ppo.horizon = 64;
  c.env.episode_length = 20;
  c.total_frames = 128 * 3;
  const auto r = explore::crl_pretrain(c, 1);
  for (const auto& m : r.metrics) CHECK(m.tiles_explored == 1.0);
}

TEST_CASE("a success radius covering the world makes every episode a success") {
  NavConfig c;
  c.task = world::TaskKind::kPointGoal;
  c.env.world.width = 16;
  c.env.world.height = 16;
  c.env.world.min_rooms = 2;
  c.env.world.max_rooms = 3;
  c.env.success_radius = 1000.0f;
  c.ppo.num_envs = 2;
  c.ppo.horizon = 16;
  c.frames = 32;
  c.eval_every = 32;
  c.eval_episodes = 8;
  c.policy_hidden = 8;
  const auto enc = random_encoder(nn::EncoderConfig{.channels = {4, 4, 8, 8}}, 2);
  const NavResult r = downstream_nav_train(enc, c, 3);
  REQUIRE(r.curve.size() == 1);
  CHECK(r.final_eval().metrics.success == 1.0);
  CHECK(r.final_eval().metrics.spl == 1.0);
  CHECK(r.final_eval().episodes == 8);
}

TEST_CASE("downstream training is deterministic and validates its seed ranges") {
  NavConfig c;
  c.task = world::TaskKind::kStyleGoal;
  c.env.world.width = 20;
  c.env.world.height = 20;
  c.env.world.min_rooms = 2;
  c.env.world.max_rooms = 4;
  c.env.episode_length = 30;
  c.ppo.num_envs = 2;
  c.ppo.horizon = 32;
  c.frames = 128;
  c.eval_every = 64;
  c.eval_episodes = 4;
  c.policy_hidden = 8;
  const auto enc = random_encoder(nn::EncoderConfig{.channels = {4, 4, 8, 8}}, 2);
  const NavResult a = downstream_nav_train(enc, c, 4);
  const NavResult b = downstream_nav_train(enc, c, 4);
  CHECK(a.curve.size() == 2);
  CHECK(a.curve.back().frames == 128);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].metrics.soft_spl == b.curve[i].metrics.soft_spl);
    CHECK(a.curve[i].metrics.soft_spl >= 0.0);
    CHECK(a.curve[i].metrics.soft_spl <= 1.0);
  }
  c.task = world::TaskKind::kImageGoal;
  CHECK_NOTHROW(downstream_nav_train(enc, c, 5));
  c.train_worlds = c.eval_worlds;
  CHECK_THROWS_AS(downstream_nav_train(enc, c, 5), ConfigError);
  CHECK(parse_task("point") == world::TaskKind::kPointGoal);
  CHECK_THROWS_AS(parse_task("object"), ConfigError);
}
