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
#include "crl/crl/gathered.hpp"
#include "crl/crl/pretrain.hpp"
#include "crl/numerics/checkpoint.hpp"

using namespace crl;
using namespace crl::explore;

namespace {

constexpr int kSide = 32;
constexpr std::size_t kFrame = 3 * kSide * kSide;

RewarderConfig small_rewarder() {
  RewarderConfig c;
  c.encoder.channels = {4, 8, 8, 16};
  c.model_minibatch = 32;
  c.model_epochs = 1;
  return c;
}

PretrainConfig small_run(Method m) {
  PretrainConfig c;
  c.method = m;
  c.ppo.num_envs = 4;
  c.ppo.horizon = 32;
  c.ppo.epochs = 1;
  c.policy_hidden = 16;
  c.total_frames = 4 * 32 * 3;
  c.env.world.width = 20;
  c.env.world.height = 20;
  c.env.world.min_rooms = 2;
  c.env.world.max_rooms = 4;
  c.env.episode_length = 40;
  c.rewarder = small_rewarder();
  return c;
}

rl::RolloutBuffer image_buffer(const std::vector<std::vector<float>>& images) {
  rl::RolloutBuffer b(1, static_cast<int>(images.size()), kFrame, 0, 1, false);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].begin(), images[i].end(), b.frames.begin() + static_cast<std::ptrdiff_t>(i * kFrame));
  }
  b.final_frames = images.front();
  return b;
}

std::vector<float> noise_image(Rng& rng) {
  std::vector<float> img(kFrame);
  for (float& v : img) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("method and mode names") {
  for (Method m : {Method::kCRL, Method::kRND, Method::kCounts, Method::kRandom}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("bogus"), ConfigError);
  CHECK(parse_mode("biological") == RunMode::kBiological);
  CHECK_THROWS_AS(parse_mode("solo"), ConfigError);
}

TEST_CASE("count rewards") {
  CHECK(counts_reward(1) == 1.0f);
  CHECK(counts_reward(4) == doctest::Approx(0.5));
  float prev = 2.0f;
  for (int n = 1; n < 50; ++n) {
    CHECK(counts_reward(n) <= prev);
    prev = counts_reward(n);
  }
  rl::RolloutBuffer b(1, 5, 1, 0, 1, false);
  b.visit_counts = {1, 1, 1, 1, 1};
  CountsRewarder r;
  const auto rw = r.raw_rewards(b, 0);
  double total = 0.0;
  for (float x : rw) total += x;
  CHECK(total == doctest::Approx(5.0));
}

TEST_CASE("zero rewarder returns zeros") {
  rl::RolloutBuffer b(2, 3, 1, 0, 1, false);
  ZeroRewarder z;
  const auto r = z.raw_rewards(b, 7);
  CHECK(r.size() == 6);
  CHECK(std::all_of(r.begin(), r.end(), [](float x) { return x == 0.0f; }));
  CHECK_FALSE(z.uses_policy());
}

TEST_CASE("RND rewards") {
  Rng rng(3);
  RNDRewarder rnd(small_rewarder(), kSide, kSide, rng);
  std::vector<std::vector<float>> imgs;
  for (int i = 0; i < 8; ++i) imgs.push_back(noise_image(rng));
  const auto b = image_buffer(imgs);
  for (float r : rnd.raw_rewards(b, 0)) CHECK(r >= 0.0f);

  rnd.predictor().copy_values_from(rnd.target());
  for (float r : rnd.raw_rewards(b, 0)) CHECK(r == 0.0f);
}

TEST_CASE("RND predictor trained on one image scores it below a held-out image") {
  Rng rng(4);
  RewarderConfig cfg = small_rewarder();
  cfg.rnd_lr = 1e-3f;
  RNDRewarder rnd(cfg, kSide, kSide, rng);
  const auto seen = noise_image(rng);
  const auto held_out = noise_image(rng);
  const auto b = image_buffer(std::vector<std::vector<float>>(32, seen));
  const auto target_before = rnd.target().clone();
  const float before = rnd.errors({seen.data()})[0];
  for (int i = 0; i < 60; ++i) rnd.train(b, rng);
  const auto err = rnd.errors({seen.data(), held_out.data()});
  MESSAGE("seen " << before << " -> " << err[0] << ", held-out " << err[1]);
  CHECK(err[0] < before);
  CHECK(err[0] < err[1]);
  CHECK(rnd.target().values_equal(target_before));
}

TEST_CASE("identity augmentations give zero contrastive rewards") {
  Rng rng(5);
  RewarderConfig cfg = small_rewarder();
  cfg.augment.flip_prob = 0.0f;
  cfg.augment.crop_min = 1.0f;
  cfg.augment.crop_max = 1.0f;
  cfg.augment.jitter = 0.0f;
  ContrastiveRewarder crl(cfg, kSide, kSide, rng);
  std::vector<std::vector<float>> imgs;
  for (int i = 0; i < 6; ++i) imgs.push_back(noise_image(rng));
  for (float r : crl.raw_rewards(image_buffer(imgs), 11)) CHECK(r == 0.0f);
}

TEST_CASE("frozen model and identity augmentations leave only the entropy term") {
  PretrainConfig c = small_run(Method::kCRL);
  c.rewarder.augment.flip_prob = 0.0f;
  c.rewarder.augment.crop_min = 1.0f;
  c.rewarder.augment.crop_max = 1.0f;
  c.rewarder.augment.jitter = 0.0f;
  PretrainHooks hooks;
  hooks.skip_learner = true;
  int checked = 0;
  hooks.on_rollout = [&](const RolloutProbe& p) {
    CHECK(std::all_of(p.buffer.rewards.begin(), p.buffer.rewards.end(), [](float r) { return r == 0.0f; }));
    ++checked;
  };
  const PretrainResult r = crl_pretrain(c, 2, hooks);
  CHECK(checked == 3);
  for (const auto& m : r.metrics) {
    CHECK(m.raw_reward == 0.0);
    CHECK(m.model_updates == 0);
  }
}

TEST_CASE("rewards handed to PPO are computed under the pre-update snapshot") {
  PretrainConfig c = small_run(Method::kCRL);
  PretrainHooks hooks;
  int checked = 0;
  hooks.on_rollout = [&](const RolloutProbe& p) {
    const auto again = p.rewarder.raw_rewards(p.buffer, p.reward_seed);
    CHECK(again == p.raw_rewards);
    for (float r : p.raw_rewards) {
      CHECK(r >= 0.0f);
      CHECK(r <= 2.0f);
    }
    ++checked;
  };
  crl_pretrain(c, 3, hooks);
  CHECK(checked == 3);
}

TEST_CASE("frame budget accounting") {
  PretrainConfig c = small_run(Method::kCounts);
  c.ppo.num_envs = 4;
  c.ppo.horizon = 128;
  c.total_frames = 1024;
  const PretrainResult r = crl_pretrain(c, 1);
  CHECK(r.iterations == 2);
  CHECK(r.frames == 1024);
  CHECK(r.metrics.back().frames == 1024);
  CHECK(r.checkpoint.metadata.at("frames") == "1024");

  c.total_frames = 1500;
  CHECK(crl_pretrain(c, 1).frames == 1024);
  c.total_frames = 511;
  CHECK_THROWS_AS(crl_pretrain(c, 1), BudgetError);
}

TEST_CASE("pretraining is deterministic for every method") {
  for (Method m : {Method::kCRL, Method::kRND, Method::kCounts, Method::kRandom}) {
    const PretrainResult a = crl_pretrain(small_run(m), 9);
    const PretrainResult b = crl_pretrain(small_run(m), 9);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) CHECK(metric_values(a.metrics[i]) == metric_values(b.metrics[i]));
    CHECK(nn::serialize(a.checkpoint) == nn::serialize(b.checkpoint));
    for (const auto& row : a.metrics) {
      for (double v : metric_values(row)) CHECK(std::isfinite(v));
    }
  }
  const auto a = crl_pretrain(small_run(Method::kCRL), 9);
  const auto b = crl_pretrain(small_run(Method::kCRL), 10);
  CHECK(nn::serialize(a.checkpoint) != nn::serialize(b.checkpoint));
}

TEST_CASE("random exploration leaves the policy untouched") {
  PretrainConfig c = small_run(Method::kRandom);
  const PretrainResult r = crl_pretrain(c, 4);
  const rl::Policy p = load_exploration_policy(r.checkpoint);
  Rng init(derive_seed(4, {1}));
  rl::PolicyConfig pc = p.config;
  const rl::Policy fresh = rl::build_policy(pc, init);
  CHECK(p.backbone.values_equal(fresh.backbone));
  CHECK(p.head.values_equal(fresh.head));
  for (const auto& m : r.metrics) CHECK(m.reward == 0.0);
}

TEST_CASE("biological mode runs one endless episode") {
  PretrainConfig c = small_run(Method::kCounts);
  c.mode = RunMode::kBiological;
  c.total_frames = 32 * 10;
  const PretrainResult r = crl_pretrain(c, 5);
  CHECK(r.iterations == 10);
  CHECK(r.frames == 320);
  double prev = 0.0;
  for (const auto& m : r.metrics) {
    CHECK(m.episodes == 0);
    CHECK(m.tiles_explored >= prev);
    prev = m.tiles_explored;
  }
  CHECK(prev > 1.0);
}

TEST_CASE("checkpoint carries policy and representation") {
  const PretrainResult r = crl_pretrain(small_run(Method::kCRL), 6);
  const auto bytes = nn::serialize(r.checkpoint);
  const nn::Checkpoint back = nn::deserialize(bytes);
  CHECK(nn::serialize(back) == bytes);
  const rl::Policy p = load_exploration_policy(back);
  CHECK(p.config.hidden == 16);
  const EncoderWeights w = load_representation(back);
  CHECK(w.config.channels == small_rewarder().encoder.channels);
  Rng unused(0);
  nn::ParamSet expect = nn::build_encoder(w.config, unused);
  back.load_params("crl.encoder", expect);
  CHECK(w.params.values_equal(expect));
  CHECK(r.sample_frames.size() == 64);

  nn::Checkpoint bare = back;
  bare.metadata.erase("encoder.channels");
  CHECK_THROWS_AS(load_representation(bare), FormatError);
}

TEST_CASE("gathered-data contrastive loss") {
  GatherConfig g;
  g.env = small_run(Method::kCRL).env;
  g.num_envs = 4;
  g.horizon = 32;
  g.frames = 256;
  const RewarderConfig learner = small_rewarder();
  const auto a = gathered_data_contrastive_loss(nullptr, g, learner, 12);
  const auto b = gathered_data_contrastive_loss(nullptr, g, learner, 12);
  CHECK(a == b);
  CHECK(a.size() == 2 * 4);
  for (float l : a) {
    CHECK(std::isfinite(l));
    CHECK(l > 0.0f);
  }
  const PretrainResult r = crl_pretrain(small_run(Method::kCRL), 6);
  const rl::Policy p = load_exploration_policy(r.checkpoint);
  const auto c = gathered_data_contrastive_loss(&p, g, learner, 12);
  CHECK(c.size() == a.size());
  CHECK(c != a);
}
