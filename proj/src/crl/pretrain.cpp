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

#include "crl/crl/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crl/common/error.hpp"

namespace crl::explore {

namespace {

constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kEnvTag = 2;
constexpr std::uint64_t kTrainTag = 3;
constexpr std::uint64_t kRewardTag = 4;
constexpr std::size_t kSampleFrames = 64;

std::string join(const std::vector<std::size_t>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  return out;
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

}  // namespace

std::string mode_name(RunMode m) { return m == RunMode::kBiological ? "biological" : "multi"; }

RunMode parse_mode(const std::string& name) {
  if (name == "multi") return RunMode::kMultiEnv;
  if (name == "biological") return RunMode::kBiological;
  throw ConfigError("unknown mode '" + name + "' (expected multi or biological)");
}

std::uint64_t PretrainConfig::frames_per_iteration() const {
  return static_cast<std::uint64_t>(num_envs()) * static_cast<std::uint64_t>(ppo.horizon);
}

void PretrainConfig::validate() const {
  ppo.validate();
  policy_backbone.validate();
  rewarder.validate();
  env.validate();
  if (env.task != world::TaskKind::kFreeRoam) throw ConfigError("pretrain: environment must be free-roaming");
  if (policy_hidden < 1) throw ConfigError("pretrain: policy hidden size must be >= 1");
}

std::vector<std::string> metric_columns() {
  return {"iteration",   "frames",      "episodes",   "tiles_explored", "raw_reward",
          "reward",      "model_loss",  "model_updates", "policy_loss", "value_loss",
          "entropy",     "approx_kl",   "clip_fraction", "grad_norm"};
}

std::vector<double> metric_values(const IterationMetrics& m) {
  return {static_cast<double>(m.iteration), static_cast<double>(m.frames), static_cast<double>(m.episodes),
          m.tiles_explored, m.raw_reward, m.reward, m.model_loss, static_cast<double>(m.model_updates),
          m.ppo.policy_loss, m.ppo.value_loss, m.ppo.entropy, m.ppo.approx_kl, m.ppo.clip_fraction,
          m.ppo.grad_norm};
}

double PretrainResult::final_tiles_explored(double final_fraction) const {
  if (metrics.empty()) return 0.0;
  const std::size_t n = metrics.size();
  const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(final_fraction * static_cast<double>(n))));
  double sum = 0.0, weight = 0.0;
  for (std::size_t i = n - std::min(take, n); i < n; ++i) {
    const double w = metrics[i].episodes > 0 ? metrics[i].episodes : 0.0;
    sum += metrics[i].tiles_explored * w;
    weight += w;
  }
  return weight > 0.0 ? sum / weight : metrics.back().tiles_explored;
}

void put_encoder_config(std::map<std::string, std::string>& meta, const std::string& prefix,
                        const nn::EncoderConfig& config) {
  meta[prefix + ".in_channels"] = std::to_string(config.in_channels);
  meta[prefix + ".channels"] = join(config.channels);
  meta[prefix + ".strides"] = join(config.strides);
  meta[prefix + ".kernel"] = std::to_string(config.kernel);
  meta[prefix + ".groups"] = std::to_string(config.groups);
}

nn::EncoderConfig get_encoder_config(const std::map<std::string, std::string>& meta, const std::string& prefix) {
  nn::EncoderConfig c;
  try {
    c.in_channels = std::stoull(meta_at(meta, prefix + ".in_channels"));
    c.channels = split_sizes(meta_at(meta, prefix + ".channels"));
    c.strides = split_sizes(meta_at(meta, prefix + ".strides"));
    c.kernel = std::stoull(meta_at(meta, prefix + ".kernel"));
    c.groups = std::stoull(meta_at(meta, prefix + ".groups"));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint: malformed encoder metadata under '" + prefix + "'");
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

rl::Policy load_exploration_policy(const nn::Checkpoint& ckpt) {
  rl::PolicyConfig pc;
  pc.backbone = get_encoder_config(ckpt.metadata, "policy.backbone");
  try {
    pc.hidden = std::stoull(meta_at(ckpt.metadata, "policy.hidden"));
    pc.image_height = std::stoi(meta_at(ckpt.metadata, "image.height"));
    pc.image_width = std::stoi(meta_at(ckpt.metadata, "image.width"));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint: malformed policy metadata");
  }
  Rng unused(0);
  rl::Policy p = rl::build_policy(pc, unused);
  ckpt.load_params("policy.backbone", p.backbone);
  ckpt.load_params("policy.head", p.head);
  return p;
}

EncoderWeights load_representation(const nn::Checkpoint& ckpt) {
  EncoderWeights w;
  w.config = get_encoder_config(ckpt.metadata, "encoder");
  Rng unused(0);
  w.params = nn::build_encoder(w.config, unused);
  if (ckpt.has_params("crl.encoder")) {
    ckpt.load_params("crl.encoder", w.params);
  } else if (ckpt.has_params("rnd.predictor")) {
    ckpt.load_params("rnd.predictor", w.params);
  } else {
    throw FormatError("checkpoint: no representation encoder stored");
  }
  return w;
}

PretrainResult crl_pretrain(const PretrainConfig& config, std::uint64_t seed, const PretrainHooks& hooks) {
  config.validate();
  const std::uint64_t per_iter = config.frames_per_iteration();
  if (config.total_frames < per_iter) {
    throw BudgetError("pretrain: budget of " + std::to_string(config.total_frames) +
                      " frames is below one iteration (" + std::to_string(per_iter) + ")");
  }
  const int iterations = static_cast<int>(config.total_frames / per_iter);
  const int n_envs = config.num_envs();

  world::EnvConfig env_cfg = config.env;
  if (config.mode == RunMode::kBiological) env_cfg.infinite_episode = true;
  const int h = env_cfg.render.height, w = env_cfg.render.width;

  Rng init_rng(derive_seed(seed, {kInitTag}));
  rl::PolicyConfig pc;
  pc.backbone = config.policy_backbone;
  pc.hidden = config.policy_hidden;
  pc.image_height = h;
  pc.image_width = w;
  rl::Policy policy = rl::build_policy(pc, init_rng);
  rl::PolicyOptimizer policy_opt = rl::make_policy_optimizer(config.ppo);
  std::unique_ptr<IntrinsicRewarder> rewarder = make_rewarder(config.method, config.rewarder, h, w, init_rng);
  contrastive::RewardNormalizer normalizer;

  world::VecEnv envs(env_cfg, n_envs, derive_seed(seed, {kEnvTag}));
  rl::RolloutState state(n_envs, pc.hidden);
  rl::RolloutBuffer buffer(n_envs, config.ppo.horizon, pc.frame_size(), 0, pc.hidden, false);
  Rng rng(derive_seed(seed, {kTrainTag}));
  rl::CollectOptions collect;
  collect.uniform_actions = !rewarder->uses_policy();

  PretrainResult result;
  for (int it = 0; it < iterations; ++it) {
    IterationMetrics m;
    m.iteration = it;
    const std::uint64_t reward_seed = derive_seed(seed, {kRewardTag, static_cast<std::uint64_t>(it)});
    std::vector<float> raw;
    const rl::RewardFn reward_fn = [&](rl::RolloutBuffer& b) {
      raw = rewarder->raw_rewards(b, reward_seed);
      double raw_sum = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i]) || raw[i] < 0.0f) throw Error("pretrain: intrinsic reward must be finite and >= 0");
        b.rewards[i] = normalizer.normalize(raw[i]);
        raw_sum += raw[i];
        sum += b.rewards[i];
      }
      m.raw_reward = raw_sum / static_cast<double>(raw.size());
      m.reward = sum / static_cast<double>(raw.size());
    };
    const rl::RolloutStats rs = rl::collect_rollout(envs, policy, state, buffer, rng, reward_fn, collect);
    if (hooks.on_rollout) hooks.on_rollout(RolloutProbe{buffer, *rewarder, reward_seed, raw});

    if (rewarder->uses_policy()) {
      rl::compute_gae(buffer, config.ppo.gamma, config.ppo.lambda);
      m.ppo = rl::ppo_update(policy, policy_opt, buffer, config.ppo, rng);
    }
    if (!hooks.skip_learner) {
      const LearnerStats ls = rewarder->train(buffer, rng);
      m.model_loss = ls.mean_loss;
      m.model_updates = ls.updates;
    }

    result.frames += per_iter;
    m.frames = result.frames;
    m.episodes = static_cast<int>(rs.episodes.size());
    if (config.mode == RunMode::kBiological) {
      m.tiles_explored = envs.env(0).visits().tiles_explored();
    } else if (!rs.episodes.empty()) {
      double t = 0.0;
      for (const auto& ep : rs.episodes) t += ep.tiles_explored;
      m.tiles_explored = t / static_cast<double>(rs.episodes.size());
    } else {
      // No episode ended: report the episodes still running.
      double t = 0.0;
      for (int e = 0; e < n_envs; ++e) t += envs.env(e).visits().tiles_explored();
      m.tiles_explored = t / n_envs;
    }
    result.metrics.push_back(m);
    ++result.iterations;
    if (hooks.on_iteration) hooks.on_iteration(m);
  }

  const std::size_t n = buffer.size();
  const std::size_t take = std::min(kSampleFrames, n);
  for (std::size_t k = 0; k < take; ++k) {
    const float* f = buffer.frame(k * n / take);
    result.sample_frames.emplace_back(f, f + buffer.frame_size);
  }

  nn::Checkpoint& ckpt = result.checkpoint;
  ckpt.add_params("policy.backbone", policy.backbone);
  ckpt.add_params("policy.head", policy.head);
  ckpt.optimizers.emplace_back("policy.backbone", policy_opt.backbone);
  ckpt.optimizers.emplace_back("policy.head", policy_opt.head);
  rewarder->save(ckpt);
  ckpt.rng_state = rng.serialize();
  ckpt.normalizer = normalizer.state();
  ckpt.metadata["method"] = method_name(config.method);
  ckpt.metadata["mode"] = mode_name(config.mode);
  ckpt.metadata["seed"] = std::to_string(seed);
  ckpt.metadata["frames"] = std::to_string(result.frames);
  ckpt.metadata["iterations"] = std::to_string(result.iterations);
  ckpt.metadata["image.height"] = std::to_string(h);
  ckpt.metadata["image.width"] = std::to_string(w);
  ckpt.metadata["policy.hidden"] = std::to_string(pc.hidden);
  put_encoder_config(ckpt.metadata, "policy.backbone", pc.backbone);
  put_encoder_config(ckpt.metadata, "encoder", config.rewarder.encoder);
  return result;
}

}  // namespace crl::explore
