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

#include "crl/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "crl/common/error.hpp"

namespace crl::cli {

namespace {

const char* const kSections[] = {"world", "encoder", "ppo", "contrastive", "run"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
void parse_number(const std::string& s, T& out) {
  T v{};
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw ConfigError("bad number '" + s + "'");
  out = v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void parse_value(const std::string& s, int& v) { parse_number(s, v); }
void parse_value(const std::string& s, std::size_t& v) { parse_number(s, v); }
void parse_value(const std::string& s, float& v) { parse_number(s, v); }
void parse_value(const std::string& s, double& v) { parse_number(s, v); }
void parse_value(const std::string& s, std::string& v) { v = s; }
void parse_value(const std::string& s, bool& v) {
  if (s == "true") v = true;
  else if (s == "false") v = false;
  else throw ConfigError("expected true or false, got '" + s + "'");
}
void parse_value(const std::string& s, std::vector<std::size_t>& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t x = 0;
    parse_number(trim(item), x);
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("empty list");
  v = std::move(out);
}
void parse_value(const std::string& s, explore::Method& v) { v = explore::parse_method(s); }
void parse_value(const std::string& s, explore::RunMode& v) { v = explore::parse_mode(s); }
void parse_value(const std::string& s, world::TaskKind& v) { v = eval::parse_task(s); }

std::string format_value(int v) { return format_number(v); }
std::string format_value(std::size_t v) { return format_number(v); }
std::string format_value(float v) { return format_number(v); }
std::string format_value(double v) { return format_number(v); }
std::string format_value(const std::string& v) { return v; }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}
std::string format_value(explore::Method v) { return explore::method_name(v); }
std::string format_value(explore::RunMode v) { return explore::mode_name(v); }
std::string format_value(world::TaskKind v) { return eval::task_name(v); }

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class A>
Field make_field(const char* section, const char* key, A access) {
  return {section, key,
          [access](const RunConfig& c) { return format_value(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v) { parse_value(v, access(c)); }};
}

#define CRL_FIELD(section, key, member) \
  make_field(section, key, [](RunConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      CRL_FIELD("world", "width", world.width),
      CRL_FIELD("world", "height", world.height),
      CRL_FIELD("world", "min_rooms", world.min_rooms),
      CRL_FIELD("world", "max_rooms", world.max_rooms),
      CRL_FIELD("world", "min_room_side", world.min_room_side),
      CRL_FIELD("world", "num_style_classes", world.num_style_classes),
      CRL_FIELD("world", "palette_jitter", world.palette_jitter),
      CRL_FIELD("world", "extra_door_prob", world.extra_door_prob),
      CRL_FIELD("world", "image_height", render.height),
      CRL_FIELD("world", "image_width", render.width),
      CRL_FIELD("world", "distance_falloff", render.distance_falloff),
      CRL_FIELD("world", "episode_length", episode_length),
      CRL_FIELD("world", "resample_world", resample_world),
      CRL_FIELD("world", "success_radius", success_radius),
      CRL_FIELD("world", "success_bonus", success_bonus),
      CRL_FIELD("world", "progress_scale", progress_scale),
      CRL_FIELD("world", "slack_penalty", slack_penalty),

      CRL_FIELD("encoder", "channels", encoder.channels),
      CRL_FIELD("encoder", "strides", encoder.strides),
      CRL_FIELD("encoder", "kernel", encoder.kernel),
      CRL_FIELD("encoder", "groups", encoder.groups),
      CRL_FIELD("encoder", "policy_channels", policy_backbone.channels),
      CRL_FIELD("encoder", "policy_strides", policy_backbone.strides),
      CRL_FIELD("encoder", "policy_kernel", policy_backbone.kernel),
      CRL_FIELD("encoder", "policy_groups", policy_backbone.groups),
      CRL_FIELD("encoder", "policy_hidden", policy_hidden),

      CRL_FIELD("ppo", "lr", ppo.lr),
      CRL_FIELD("ppo", "clip", ppo.clip),
      CRL_FIELD("ppo", "entropy_coef", ppo.entropy_coef),
      CRL_FIELD("ppo", "value_coef", ppo.value_coef),
      CRL_FIELD("ppo", "gamma", ppo.gamma),
      CRL_FIELD("ppo", "lambda", ppo.lambda),
      CRL_FIELD("ppo", "horizon", ppo.horizon),
      CRL_FIELD("ppo", "epochs", ppo.epochs),
      CRL_FIELD("ppo", "num_envs", ppo.num_envs),
      CRL_FIELD("ppo", "minibatches", ppo.minibatches),
      CRL_FIELD("ppo", "max_grad_norm", ppo.max_grad_norm),

      CRL_FIELD("contrastive", "temperature", contrastive.temperature),
      CRL_FIELD("contrastive", "projection_dim", contrastive.projection_dim),
      CRL_FIELD("contrastive", "projection_hidden", contrastive.projection_hidden),
      CRL_FIELD("contrastive", "lr", contrastive.lr),
      CRL_FIELD("contrastive", "flip_prob", augment.flip_prob),
      CRL_FIELD("contrastive", "crop_min", augment.crop_min),
      CRL_FIELD("contrastive", "crop_max", augment.crop_max),
      CRL_FIELD("contrastive", "jitter", augment.jitter),
      CRL_FIELD("contrastive", "model_epochs", model_epochs),
      CRL_FIELD("contrastive", "model_minibatch", model_minibatch),
      CRL_FIELD("contrastive", "rnd_lr", rnd_lr),

      CRL_FIELD("run", "seed", run.seed),
      CRL_FIELD("run", "rewarder", run.rewarder),
      CRL_FIELD("run", "mode", run.mode),
      CRL_FIELD("run", "task", run.task),
      CRL_FIELD("run", "freeze", run.freeze),
      CRL_FIELD("run", "checkpoint", run.checkpoint),
      CRL_FIELD("run", "pretrain_frames", run.pretrain_frames),
      CRL_FIELD("run", "nav_frames", run.nav_frames),
      CRL_FIELD("run", "gather_frames", run.gather_frames),
      CRL_FIELD("run", "eval_every", run.eval_every),
      CRL_FIELD("run", "eval_episodes", run.eval_episodes),
      CRL_FIELD("run", "nav_envs", run.nav_envs),
      CRL_FIELD("run", "explore_seeds", run.explore_seeds),
      CRL_FIELD("run", "diversity_batch", run.diversity_batch),
      CRL_FIELD("run", "probe_worlds", run.probe_worlds),
      CRL_FIELD("run", "probe_samples_per_world", run.probe_samples_per_world),
      CRL_FIELD("run", "probe_val_fraction", run.probe_val_fraction),
      CRL_FIELD("run", "probe_lr", run.probe_lr),
      CRL_FIELD("run", "probe_max_epochs", run.probe_max_epochs),
      CRL_FIELD("run", "probe_minibatch", run.probe_minibatch),
  };
  return all;
}

#undef CRL_FIELD

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  try {
    pretrain_config(*this).validate();
    nav_config(*this).validate();
    probe_config(*this).validate();
    encoder.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (run.nav_envs < 1) throw ConfigError("config: [run] nav_envs must be >= 1");
  if (run.explore_seeds < 1) throw ConfigError("config: [run] explore_seeds must be >= 1");
  if (run.diversity_batch < 2) throw ConfigError("config: [run] diversity_batch must be >= 2");
  if (run.eval_episodes < 1) throw ConfigError("config: [run] eval_episodes must be >= 1");
  if (run.eval_every < 1) throw ConfigError("config: [run] eval_every must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const char* s : kSections) known = known || section == s;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* f = find_field(section, key);
    if (!f) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      f->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + "[" + section + "] " + key + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

world::EnvConfig env_config(const RunConfig& c) {
  world::EnvConfig e;
  e.world = c.world;
  e.render = c.render;
  e.episode_length = c.episode_length;
  e.resample_world = c.resample_world;
  e.success_radius = c.success_radius;
  e.success_bonus = c.success_bonus;
  e.progress_scale = c.progress_scale;
  e.slack_penalty = c.slack_penalty;
  return e;
}

explore::RewarderConfig rewarder_config(const RunConfig& c) {
  explore::RewarderConfig r;
  r.encoder = c.encoder;
  r.contrastive = c.contrastive;
  r.augment = c.augment;
  r.model_epochs = c.model_epochs;
  r.model_minibatch = c.model_minibatch;
  r.rnd_lr = c.rnd_lr;
  return r;
}

explore::PretrainConfig pretrain_config(const RunConfig& c) {
  explore::PretrainConfig p;
  p.method = c.run.rewarder;
  p.mode = c.run.mode;
  p.total_frames = c.run.pretrain_frames;
  p.env = env_config(c);
  p.ppo = c.ppo;
  p.policy_backbone = c.policy_backbone;
  p.policy_hidden = c.policy_hidden;
  p.rewarder = rewarder_config(c);
  return p;
}

eval::NavConfig nav_config(const RunConfig& c) {
  eval::NavConfig n;
  n.task = c.run.task;
  n.env = env_config(c);
  n.ppo = c.ppo;
  n.ppo.num_envs = c.run.nav_envs;
  n.policy_hidden = c.policy_hidden;
  n.frames = c.run.nav_frames;
  n.eval_every = c.run.eval_every;
  n.eval_episodes = c.run.eval_episodes;
  n.freeze = c.run.freeze;
  return n;
}

eval::ProbeConfig probe_config(const RunConfig& c) {
  eval::ProbeConfig p;
  p.world = c.world;
  p.render = c.render;
  p.num_worlds = c.run.probe_worlds;
  p.samples_per_world = c.run.probe_samples_per_world;
  p.val_fraction = c.run.probe_val_fraction;
  p.lr = c.run.probe_lr;
  p.max_epochs = c.run.probe_max_epochs;
  p.minibatch = c.run.probe_minibatch;
  return p;
}

explore::GatherConfig gather_config(const RunConfig& c) {
  explore::GatherConfig g;
  g.env = env_config(c);
  g.num_envs = c.ppo.num_envs;
  g.horizon = c.ppo.horizon;
  g.frames = c.run.gather_frames;
  return g;
}

}  // namespace crl::cli
