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
#include <numeric>

#include "doctest.h"

#include "crl/common/error.hpp"
#include "crl/contrastive/model.hpp"
#include "crl/numerics/ops.hpp"
#include "crl/worldsim/env.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace crl;
using namespace crl::contrastive;
using nn::Tensor;

namespace {

world::Observation random_image(Rng& rng, int h = 32, int w = 32) {
  world::Observation o(h, w);
  for (float& v : o.pixels) v = static_cast<float>(rng.uniform());
  return o;
}

Tensor unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Tensor t = Tensor::zeros({n, d});
  auto v = t.data();
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      v[i * d + j] = static_cast<float>(rng.normal());
      norm += static_cast<double>(v[i * d + j]) * v[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) v[i * d + j] = static_cast<float>(v[i * d + j] / std::sqrt(norm));
  }
  return t;
}

testing::Rows to_rows(const Tensor& t) {
  testing::Rows rows(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    for (std::size_t j = 0; j < t.dim(1); ++j) rows[i][j] = t.data()[i * t.dim(1) + j];
  }
  return rows;
}

}  // namespace

TEST_CASE("identity augmentation returns the input") {
  AugmentationConfig cfg;
  cfg.flip_prob = 0.0f;
  cfg.crop_min = cfg.crop_max = 1.0f;
  cfg.jitter = 0.0f;
  Rng rng(1);
  const auto x = random_image(rng);
  const auto [a, b] = augment_pair(x, cfg, rng);
  CHECK(a == x);
  CHECK(b == x);
}

TEST_CASE("flip is an involution") {
  Rng rng(2);
  const auto x = random_image(rng, 5, 7);
  CHECK(flip_horizontal(flip_horizontal(x)) == x);
  CHECK_FALSE(flip_horizontal(x) == x);
  AugmentationConfig cfg;
  cfg.flip_prob = 1.0f;
  cfg.crop_min = cfg.crop_max = 1.0f;
  cfg.jitter = 0.0f;
  CHECK(augment(x, cfg, rng) == flip_horizontal(x));
}

TEST_CASE("flip frequency") {
  const AugmentationConfig cfg;
  Rng rng(3);
  int flips = 0;
  for (int i = 0; i < 1000; ++i) flips += sample_augment(32, 32, cfg, rng).flip ? 1 : 0;
  // Binomial(1000, 0.5) has sd 15.8; the band is about 3.2 sd wide each way.
  CHECK(flips >= 450);
  CHECK(flips <= 550);
}

TEST_CASE("augmented views stay in range and crops in bounds") {
  const AugmentationConfig cfg;
  Rng rng(4);
  const auto x = random_image(rng);
  for (int i = 0; i < 200; ++i) {
    const AugmentParams p = sample_augment(32, 32, cfg, rng);
    CHECK(p.crop_x >= 0);
    CHECK(p.crop_y >= 0);
    CHECK(p.crop_x + p.crop_w <= 32);
    CHECK(p.crop_y + p.crop_h <= 32);
    const double area = static_cast<double>(p.crop_w * p.crop_h) / (32.0 * 32.0);
    CHECK(area >= 0.55);
    CHECK(area <= 1.0);
    const auto v = augment(x, cfg, rng);
    for (float f : v.pixels) {
      REQUIRE(f >= 0.0f);
      REQUIRE(f <= 1.0f);
    }
  }
  AugmentationConfig bad;
  bad.crop_min = 0.0f;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("projection rows are unit vectors") {
  Rng rng(5);
  nn::EncoderConfig ec;
  const ContrastiveModel m = build_model(ec, {}, rng);
  Tensor batch = Tensor::zeros({5, 3, 32, 32});
  for (auto& v : batch.data()) v = static_cast<float>(rng.uniform());
  std::copy_n(batch.data().begin(), 3 * 32 * 32, batch.data().begin() + 4 * 3 * 32 * 32);
  const Tensor z = project(m, batch);
  REQUIRE(z.shape() == nn::Shape{5, 32});
  for (std::size_t i = 0; i < 5; ++i) {
    const auto row = z.data().subspan(i * 32, 32);
    CHECK(sim(row, row) == doctest::Approx(1.0f).epsilon(1e-5));
  }
  for (std::size_t j = 0; j < 32; ++j) CHECK(z.data()[j] == doctest::Approx(z.data()[4 * 32 + j]).epsilon(1e-5));
  CHECK_THROWS_AS(project(m, Tensor::zeros({2, 4, 32, 32})), ShapeError);
}

TEST_CASE("sim and intrinsic reward") {
  const std::vector<float> x{1, 0}, y{0, 1}, nx{-1, 0};
  CHECK(sim(x, x) == 1.0f);
  CHECK(sim(x, y) == 0.0f);
  CHECK(sim(x, nx) == -1.0f);
  CHECK(intrinsic_reward(x, x) == 0.0f);
  CHECK(intrinsic_reward(x, y) == 1.0f);
  CHECK(intrinsic_reward(x, nx) == 2.0f);
}

TEST_CASE("infonce on hand-computed cases") {
  Tensor one({1, 3}, {0.6f, 0.8f, 0.0f});
  CHECK(infonce_loss(one, one, 0.07f).item() == doctest::Approx(0.0).epsilon(1e-6));
  Tensor z({2, 2}, {1, 0, 0, 1});
  const double expected = -std::log(std::exp(1.0) / (2.0 * std::exp(1.0) + 2.0));
  CHECK(expected == doctest::Approx(1.0066).epsilon(1e-4));
  CHECK(std::abs(infonce_loss(z, z, 1.0f).item() - expected) < 1e-4);
  CHECK_THROWS_AS(infonce_loss(z, one, 1.0f), ShapeError);
}

TEST_CASE("infonce matches the scalar reference for N up to 4") {
  Rng rng(6);
  double worst = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int set = 0; set < 50; ++set) {
      const std::size_t d = 2 + rng.below(31);
      const Tensor z1 = unit_rows(n, d, rng), z2 = unit_rows(n, d, rng);
      for (float tau : {0.07f, 0.5f, 1.0f}) {
        const double got = infonce_loss(z1, z2, tau).item();
        const double want = testing::infonce_reference(to_rows(z1), to_rows(z2), tau);
        worst = std::max(worst, std::abs(got - want));
      }
    }
  }
  INFO("worst abs error " << worst);
  CHECK(worst < 1e-6);
}

TEST_CASE("infonce symmetries") {
  Rng rng(7);
  const Tensor z1 = unit_rows(4, 6, rng), z2 = unit_rows(4, 6, rng);
  const float base = infonce_loss(z1, z2, 0.2f).item();
  // Same row permutation on both sides.
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  Tensor p1 = Tensor::zeros({4, 6}), p2 = Tensor::zeros({4, 6});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      p1.data()[i * 6 + j] = z1.data()[perm[i] * 6 + j];
      p2.data()[i * 6 + j] = z2.data()[perm[i] * 6 + j];
    }
  }
  CHECK(infonce_loss(p1, p2, 0.2f).item() == doctest::Approx(base).epsilon(1e-5));
  // Shared orthonormal rotation.
  const Tensor q = nn::orthogonal(6, 6, rng);
  const Tensor r1 = nn::matmul(z1, q), r2 = nn::matmul(z2, q);
  CHECK(infonce_loss(r1, r2, 0.2f).item() == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("infonce gradient matches finite differences") {
  testing::OpCase op;
  op.name = "infonce";
  op.make_inputs = [](Rng& rng) {
    return std::vector<Tensor>{unit_rows(4, 5, rng), unit_rows(4, 5, rng)};
  };
  op.forward = [](const std::vector<Tensor>& in) { return infonce_loss(in[0], in[1], 0.5f); };
  op.differentiable = {true, true};
  const auto r = testing::check_op(op, 100, 8);
  INFO("worst " << r.worst_rel_error);
  CHECK(r.failures == 0);
}

TEST_CASE("reward normalizer") {
  RewardNormalizer first;
  CHECK(first.normalize(0.7f) == doctest::Approx(0.7f));
  CHECK(first.normalize(0.3f) == doctest::Approx(0.3f));

  RewardNormalizer constant;
  for (int i = 0; i < 100; ++i) constant.normalize(0.5f);
  CHECK(constant.sigma() < 1e-6);
  CHECK(constant.normalize(0.5f) == doctest::Approx(0.5 / std::max(constant.sigma(), RewardNormalizer::kFloor)));

  RewardNormalizer alt;
  std::vector<double> seen;
  for (int i = 0; i < 2000; ++i) {
    const float r = (i % 2) ? 2.0f : 0.0f;
    const float out = alt.normalize(r);
    if (seen.size() >= 2) {
      CHECK(out == doctest::Approx(r / testing::stddev_reference(seen)).epsilon(1e-6));
    }
    seen.push_back(r);
  }
  CHECK(alt.sigma() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(alt.normalize(2.0f) == doctest::Approx(2.0f).epsilon(1e-3));
  CHECK(alt.normalize(0.0f) == 0.0f);
}

TEST_CASE("rewards vanish under identity augmentation") {
  Rng rng(9);
  const ContrastiveModel m = build_model({}, {}, rng);
  world::EnvConfig ecfg;
  world::Env env(ecfg, 3);
  std::vector<world::Observation> frames;
  for (int i = 0; i < 10; ++i) {
    frames.push_back(env.observation());
    env.step(static_cast<world::Action>(i % 3));
  }
  std::vector<const float*> ptrs;
  for (const auto& f : frames) ptrs.push_back(f.pixels.data());
  AugmentationConfig id;
  id.flip_prob = 0.0f;
  id.crop_min = id.crop_max = 1.0f;
  id.jitter = 0.0f;
  for (float r : contrastive_rewards(m, ptrs, 32, 32, id, 1)) CHECK(r == 0.0f);

  const auto a = contrastive_rewards(m, ptrs, 32, 32, {}, 5);
  const auto b = contrastive_rewards(m, ptrs, 32, 32, {}, 5);
  CHECK(a == b);
  for (float r : a) {
    CHECK(r >= 0.0f);
    CHECK(r <= 2.0f);
  }
  CHECK(*std::max_element(a.begin(), a.end()) > 0.0f);
}

TEST_CASE("contrastive training lowers the loss on a fixed set") {
  Rng rng(10);
  ContrastiveModel m = build_model({}, {}, rng);
  nn::AdamState eo, po;
  eo.config.lr = po.config.lr = 1e-3f;
  std::vector<world::Observation> frames;
  world::EnvConfig ecfg;
  world::Env env(ecfg, 4);
  for (int i = 0; i < 32; ++i) {
    frames.push_back(env.observation());
    for (int k = 0; k < 5; ++k) env.step(static_cast<world::Action>(rng.below(3)));
  }
  std::vector<const float*> ptrs;
  for (const auto& f : frames) ptrs.push_back(f.pixels.data());
  std::vector<float> losses;
  train_contrastive(m, eo, po, ptrs, 32, 32, {}, 40, 16, rng, &losses);
  REQUIRE(losses.size() == 80u);
  const double early = std::accumulate(losses.begin(), losses.begin() + 10, 0.0) / 10;
  const double late = std::accumulate(losses.end() - 10, losses.end(), 0.0) / 10;
  CHECK(late < early);
}
