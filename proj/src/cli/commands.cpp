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

#include "crl/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "crl/cli/config.hpp"
#include "crl/cli/output.hpp"
#include "crl/common/error.hpp"
#include "crl/eval/diversity.hpp"
#include "crl/eval/metrics.hpp"
#include "crl/worldsim/render.hpp"

namespace fs = std::filesystem;

namespace crl::cli {

namespace {

constexpr std::uint64_t kProbeDataTag = 11;
constexpr std::uint64_t kProbeTrainTag = 12;
constexpr std::uint64_t kRandomEncoderTag = 13;
constexpr std::uint64_t kGatherTag = 14;
constexpr int kViewCols = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::string rewarder;
  std::string freeze;
  std::optional<std::uint64_t> frames;
  std::string mode;
  std::string task;
  std::string checkpoint;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  std::ostream& log;
};

void apply_flags(const std::string& command, const Flags& f, RunConfig& c) {
  if (f.seed) c.run.seed = *f.seed;
  if (!f.rewarder.empty()) c.run.rewarder = explore::parse_method(f.rewarder);
  if (!f.mode.empty()) c.run.mode = explore::parse_mode(f.mode);
  if (!f.task.empty()) c.run.task = eval::parse_task(f.task);
  if (!f.freeze.empty()) c.run.freeze = f.freeze == "true";
  if (!f.checkpoint.empty()) c.run.checkpoint = f.checkpoint;
  if (f.frames) {
    if (command == "nav") c.run.nav_frames = *f.frames;
    else if (command == "diversity" || command == "gathered-loss") c.run.gather_frames = *f.frames;
    else c.run.pretrain_frames = *f.frames;
  }
}

std::optional<nn::Checkpoint> input_checkpoint(const RunConfig& c) {
  if (c.run.checkpoint.empty()) return std::nullopt;
  return nn::load_checkpoint(c.run.checkpoint);
}

explore::EncoderWeights input_encoder(const RunConfig& c) {
  if (const auto ckpt = input_checkpoint(c)) return explore::load_representation(*ckpt);
  return eval::random_encoder(c.encoder, derive_seed(c.run.seed, {kRandomEncoderTag}));
}

// The exploration policy of the input checkpoint; empty for uniform random
// actions (no checkpoint, or a random-exploration run).
std::optional<rl::Policy> input_policy(const RunConfig& c) {
  const auto ckpt = input_checkpoint(c);
  if (!ckpt) return std::nullopt;
  const auto it = ckpt->metadata.find("method");
  if (it != ckpt->metadata.end() && it->second == explore::method_name(explore::Method::kRandom)) {
    return std::nullopt;
  }
  return explore::load_exploration_policy(*ckpt);
}

world::Observation as_observation(const std::vector<float>& frame, int h, int w) {
  world::Observation o(h, w);
  o.pixels = frame;
  return o;
}

int cmd_pretrain(Context& ctx) {
  const explore::PretrainConfig pc = pretrain_config(ctx.cfg);
  MetricsLog log(ctx.out / "metrics.csv", explore::metric_columns());
  explore::PretrainHooks hooks;
  hooks.on_iteration = [&](const explore::IterationMetrics& m) { log.append(explore::metric_values(m)); };
  const explore::PretrainResult r = explore::crl_pretrain(pc, ctx.cfg.run.seed, hooks);
  nn::save_checkpoint(ctx.out / "checkpoint.crl", r.checkpoint);
  std::vector<world::Observation> views;
  for (const auto& f : r.sample_frames) views.push_back(as_observation(f, pc.env.render.height, pc.env.render.width));
  if (!views.empty()) {
    world::write_file((ctx.out / "samples.ppm").string(), world::encode_ppm(world::tile_observations(views, 8)));
  }
  ctx.log << "pretrain " << explore::method_name(pc.method) << ": " << r.frames << " frames, " << r.iterations
          << " iterations, final tiles/episode " << format_metric(r.final_tiles_explored()) << "\n";
  return kExitOk;
}

int cmd_explore(Context& ctx) {
  const explore::PretrainConfig pc = pretrain_config(ctx.cfg);
  std::vector<explore::PretrainResult> runs;
  for (int i = 0; i < ctx.cfg.run.explore_seeds; ++i) {
    const std::uint64_t seed = ctx.cfg.run.seed + static_cast<std::uint64_t>(i);
    runs.push_back(explore::crl_pretrain(pc, seed));
    ctx.log << "seed " << seed << ": final tiles/episode " << format_metric(runs.back().final_tiles_explored())
            << "\n";
  }
  MetricsLog log(ctx.out / "explore.csv", {"frames", "tiles_mean", "tiles_se"});
  for (const auto& p : eval::exploration_curve(runs)) log.append({static_cast<double>(p.frames), p.mean, p.se});
  std::vector<double> finals;
  for (const auto& r : runs) finals.push_back(r.final_tiles_explored());
  const eval::MeanStderr m = eval::mean_stderr(finals);
  ctx.log << "explore " << explore::method_name(pc.method) << ": final tiles/episode " << format_metric(m.mean)
          << " +- " << format_metric(m.se) << "\n";
  return kExitOk;
}

int cmd_probe(Context& ctx) {
  const eval::ProbeConfig pc = probe_config(ctx.cfg);
  const explore::EncoderWeights enc = input_encoder(ctx.cfg);
  const eval::ProbeData data = eval::collect_probe_data(pc, derive_seed(ctx.cfg.run.seed, {kProbeDataTag}));
  const eval::ProbeResult r =
      eval::linear_probe(enc.params, enc.config, data, pc, derive_seed(ctx.cfg.run.seed, {kProbeTrainTag}));
  std::vector<std::string> cols = {"top1", "train_size", "val_size", "epochs"};
  std::vector<double> row = {r.top1, static_cast<double>(r.train_size), static_cast<double>(r.val_size),
                             static_cast<double>(r.epochs)};
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    cols.push_back("class_" + std::to_string(k));
    row.push_back(r.per_class[k]);
  }
  MetricsLog log(ctx.out / "probe.csv", cols);
  log.append(row);
  ctx.log << "probe top1 " << format_metric(r.top1) << " on " << r.val_size << " held-out frames\n";
  return kExitOk;
}

int cmd_nav(Context& ctx) {
  const eval::NavConfig nc = nav_config(ctx.cfg);
  const explore::EncoderWeights enc = input_encoder(ctx.cfg);
  MetricsLog log(ctx.out / "nav.csv", {"frames", "success", "spl", "soft_spl", "goal_distance", "episodes", "degenerate"});
  const eval::NavResult r = eval::downstream_nav_train(enc, nc, ctx.cfg.run.seed, [&](const eval::NavEval& e) {
    log.append({static_cast<double>(e.frames), e.metrics.success, e.metrics.spl, e.metrics.soft_spl,
                e.metrics.goal_distance, static_cast<double>(e.episodes), static_cast<double>(e.degenerate)});
  });
  const auto& f = r.final_eval().metrics;
  ctx.log << "nav " << eval::task_name(nc.task) << (nc.freeze ? " frozen" : " unfrozen") << ": success "
          << format_metric(f.success) << ", spl " << format_metric(f.spl) << ", soft_spl " << format_metric(f.soft_spl)
          << "\n";
  return kExitOk;
}

int cmd_diversity(Context& ctx) {
  const explore::GatherConfig gc = gather_config(ctx.cfg);
  const auto policy = input_policy(ctx.cfg);
  const eval::DiversityEmbedding emb = eval::make_diversity_embedding();
  const auto scores = eval::gathered_diversity(policy ? &*policy : nullptr, gc, ctx.cfg.run.diversity_batch,
                                               derive_seed(ctx.cfg.run.seed, {kGatherTag}), emb);
  MetricsLog log(ctx.out / "diversity.csv", {"batch", "diversity", "pair_se"});
  std::vector<double> means;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    log.append({static_cast<double>(i), scores[i].mean, scores[i].se});
    means.push_back(scores[i].mean);
  }
  const eval::MeanStderr m = eval::mean_stderr(means);
  ctx.log << "diversity " << format_metric(m.mean) << " +- " << format_metric(m.se) << " over " << m.n
          << " batches\n";
  return kExitOk;
}

int cmd_gathered_loss(Context& ctx) {
  const explore::GatherConfig gc = gather_config(ctx.cfg);
  const auto policy = input_policy(ctx.cfg);
  const auto losses = explore::gathered_data_contrastive_loss(policy ? &*policy : nullptr, gc, rewarder_config(ctx.cfg),
                                                              derive_seed(ctx.cfg.run.seed, {kGatherTag}));
  MetricsLog log(ctx.out / "gathered_loss.csv", {"update", "loss"});
  for (std::size_t i = 0; i < losses.size(); ++i) log.append({static_cast<double>(i), losses[i]});
  ctx.log << "gathered-loss: " << losses.size() << " updates\n";
  return kExitOk;
}

int cmd_plot(Context& ctx) {
  if (!fs::is_directory(ctx.out)) throw IOError("plot: no such directory '" + ctx.out.string() + "'");
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(ctx.out)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::size_t n = 0;
  for (const auto& c : csvs) n += plot_csv(c).size();
  ctx.log << "plot: " << n << " charts from " << csvs.size() << " CSV files\n";
  return kExitOk;
}

int cmd_worldview(Context& ctx) {
  const world::EnvConfig ec = env_config(ctx.cfg);
  const std::uint64_t world_seed = ec.world_seeds.base + ctx.cfg.run.seed;
  const world::WorldSpec w = world::generate_world(world_seed, ctx.cfg.world);
  Rng rng(ctx.cfg.run.seed);
  world::AgentState spawn = world::reset_agent(w, rng);
  world::write_file((ctx.out / "world.ppm").string(), world::encode_map_ppm(w, &spawn));
  std::vector<world::Observation> views;
  for (int h = 0; h < 4; ++h) {
    spawn.heading = static_cast<world::Heading>(h);
    views.push_back(world::render(w, spawn, ec.render));
  }
  for (int i = 0; i < 12; ++i) views.push_back(world::render(w, world::reset_agent(w, rng), ec.render));
  world::write_file((ctx.out / "views.ppm").string(), world::encode_ppm(world::tile_observations(views, kViewCols)));
  ctx.log << "worldview: world " << world_seed << ", " << w.rooms.size() << " rooms\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive curiosity: exploration pretraining and evaluation", "crl"};
  app.require_subcommand(1, 1);
  Flags f;
  app.add_option("--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Run seed");
  app.add_option("--out", f.out, "Output directory")->capture_default_str();
  app.add_option("--rewarder", f.rewarder, "Exploration reward")->check(CLI::IsMember({"crl", "rnd", "counts", "random"}));
  app.add_option("--freeze", f.freeze, "Freeze the encoder during downstream training")
      ->check(CLI::IsMember({"true", "false"}));
  app.add_option("--frames", f.frames, "Frame budget of the command");
  app.add_option("--mode", f.mode, "Pretraining mode")->check(CLI::IsMember({"multi", "biological"}));
  app.add_option("--task", f.task, "Downstream task")->check(CLI::IsMember({"image", "style", "point"}));
  app.add_option("--checkpoint", f.checkpoint, "Pretraining checkpoint to evaluate");
  for (const char* name : {"pretrain", "probe", "nav", "explore", "diversity", "gathered-loss", "plot", "worldview"}) {
    app.add_subcommand(name)->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    apply_flags(command, f, cfg);
    cfg.validate();
    Context ctx{cfg, fs::path(f.out), out};
    fs::create_directories(ctx.out);
    if (command != "plot") write_text(ctx.out / "config.ini", to_text(cfg));
    if (command == "pretrain") return cmd_pretrain(ctx);
    if (command == "explore") return cmd_explore(ctx);
    if (command == "probe") return cmd_probe(ctx);
    if (command == "nav") return cmd_nav(ctx);
    if (command == "diversity") return cmd_diversity(ctx);
    if (command == "gathered-loss") return cmd_gathered_loss(ctx);
    if (command == "plot") return cmd_plot(ctx);
    return cmd_worldview(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace crl::cli
