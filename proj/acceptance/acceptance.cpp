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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 once
// every selected criterion has been evaluated; --strict turns any FAIL into
// exit status 1.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crl/cli/commands.hpp"
#include "crl/cli/config.hpp"
#include "crl/common/error.hpp"
#include "crl/common/runtime.hpp"
#include "crl/contrastive/model.hpp"
#include "crl/eval/diversity.hpp"
#include "crl/eval/metrics.hpp"
#include "crl/rl/corridor.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace crl;

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kSeeds = 5;
constexpr std::uint64_t kFirstSeed = 1;

// Pinned tolerances and budgets.
constexpr int kGradCases = 100;
constexpr double kGradTol = 1e-3;
constexpr double kGradSeconds = 60.0;
constexpr int kInfoNceSets = 50;
constexpr double kInfoNceTol = 1e-6;
constexpr double kInfoNceOrthoTol = 1e-4;
constexpr double kCorridorSuccess = 0.95;
constexpr std::uint64_t kCorridorFrames = 50000;
constexpr double kCorridorSeconds = 300.0;
constexpr std::uint64_t kExploreFrames = 200000;
constexpr double kExploreVsRandom = 1.3;
constexpr double kExploreVsRnd = 1.1;
constexpr double kExploreSeconds = 3600.0;
constexpr double kFinalUpdateShare = 0.25;
constexpr int kSeedsRequired = 4;
constexpr double kDiversityStderrs = 2.0;
constexpr std::uint64_t kDiversityFrames = 16384;
constexpr int kDiversityBatch = 64;
constexpr double kProbeMargin = 0.10;
constexpr std::uint64_t kNavFrames = 300000;
constexpr double kPointGoalGap = 0.05;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

struct Report {
  int passed = 0;
  int failed = 0;
  void line(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed) += 1;
  }
};

void progress(const std::string& msg) {
  std::fprintf(stderr, "  .. %s\n", msg.c_str());
  std::fflush(stderr);
}

// Pretraining runs shared by criteria 4 to 8, computed once per process and
// optionally persisted to a cache directory.
class PretrainRuns {
 public:
  explore::PretrainConfig config(explore::Method m) const {
    cli::RunConfig rc;
    rc.run.rewarder = m;
    rc.run.pretrain_frames = kExploreFrames;
    return cli::pretrain_config(rc);
  }

  struct Run {
    nn::Checkpoint checkpoint;
    double final_tiles = 0.0;
    double seconds = 0.0;
  };

  explicit PretrainRuns(std::optional<fs::path> cache) : cache_(std::move(cache)) {
    if (cache_) fs::create_directories(*cache_);
  }

  const Run& get(explore::Method m, std::uint64_t seed) {
    const auto key = std::make_pair(m, seed);
    if (const auto it = runs_.find(key); it != runs_.end()) return it->second;
    const std::string stem = explore::method_name(m) + "_" + std::to_string(seed);
    Run r;
    if (cache_ && fs::exists(*cache_ / (stem + ".crl"))) {
      r.checkpoint = nn::load_checkpoint(*cache_ / (stem + ".crl"));
      std::ifstream f(*cache_ / (stem + ".txt"));
      f >> r.final_tiles >> r.seconds;
      progress("cached " + stem);
    } else {
      const auto t0 = Clock::now();
      const explore::PretrainResult res = explore::crl_pretrain(config(m), seed);
      r.checkpoint = res.checkpoint;
      r.final_tiles = res.final_tiles_explored();
      r.seconds = seconds_since(t0);
      progress("pretrained " + stem + " tiles " + fmt(r.final_tiles) + " in " + fmt(r.seconds, 3) + " s");
      if (cache_) {
        nn::save_checkpoint(*cache_ / (stem + ".crl"), r.checkpoint);
        std::ofstream f(*cache_ / (stem + ".txt"));
        f.precision(17);
        f << r.final_tiles << " " << r.seconds << "\n";
      }
    }
    return runs_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::optional<fs::path> cache_;
  std::map<std::pair<explore::Method, std::uint64_t>, Run> runs_;
};

nn::Tensor unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  nn::Tensor t = nn::Tensor::zeros({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const float v = static_cast<float>(rng.normal());
      t.data()[i * d + j] = v;
      norm += static_cast<double>(v) * v;
    }
    for (std::size_t j = 0; j < d; ++j) t.data()[i * d + j] /= static_cast<float>(std::sqrt(norm));
  }
  return t;
}

testing::Rows to_rows(const nn::Tensor& t) {
  const std::size_t n = t.shape()[0], d = t.shape()[1];
  testing::Rows out(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i][j] = t.data()[i * d + j];
  }
  return out;
}

void criterion_1(Report& rep) {
  const auto t0 = Clock::now();
  int ops = 0, failing = 0;
  double worst = 0.0;
  std::string worst_op;
  for (const auto& op : testing::all_op_cases()) {
    const auto r = testing::check_op(op, kGradCases, 101, 1e-3, kGradTol);
    ++ops;
    if (r.failures > 0 || r.cases != kGradCases) ++failing;
    if (r.worst_rel_error > worst) worst = r.worst_rel_error, worst_op = op.name;
  }
  const double s = seconds_since(t0);
  rep.line(1, failing == 0 && s < kGradSeconds,
           std::to_string(ops) + " ops x " + std::to_string(kGradCases) + " cases, failing ops " +
               std::to_string(failing) + ", worst rel err " + fmt(worst, 3) + " (" + worst_op + "), " + fmt(s, 3) +
               " s");
}

void criterion_2(Report& rep) {
  Rng rng(202);
  double worst = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int set = 0; set < kInfoNceSets; ++set) {
      const std::size_t d = 2 + rng.below(31);
      const nn::Tensor z1 = unit_rows(n, d, rng), z2 = unit_rows(n, d, rng);
      for (float tau : {0.07f, 1.0f}) {
        const double got = contrastive::infonce_loss(z1, z2, tau).item();
        worst = std::max(worst, std::abs(got - testing::infonce_reference(to_rows(z1), to_rows(z2), tau)));
      }
    }
  }
  const nn::Tensor eye({2, 2}, {1, 0, 0, 1});
  const double ortho = contrastive::infonce_loss(eye, eye, 1.0f).item();
  const double expect = -std::log(std::exp(1.0) / (2.0 * std::exp(1.0) + 2.0));
  const double ortho_err = std::abs(ortho - expect);
  rep.line(2, worst < kInfoNceTol && ortho_err < kInfoNceOrthoTol,
           "max |loss - reference| " + fmt(worst, 3) + " over N<=4 x " + std::to_string(kInfoNceSets) +
               " sets; N=2 orthogonal " + fmt(ortho, 8) + " vs " + fmt(expect, 8));
}

void criterion_3(Report& rep) {
  const auto t0 = Clock::now();
  int solved = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    rl::CorridorConfig c;
    c.frame_budget = kCorridorFrames;
    const rl::CorridorResult r = rl::run_corridor(c, seed);
    const bool ok = r.success_rate >= kCorridorSuccess && r.frames <= kCorridorFrames;
    solved += ok;
    detail += "seed " + std::to_string(seed) + " success " + fmt(r.success_rate, 3) + " @ " +
              std::to_string(r.frames) + " frames; ";
  }
  const double s = seconds_since(t0);
  rep.line(3, solved == 3 && s < kCorridorSeconds, detail + fmt(s, 3) + " s");
}

void criterion_4(Report& rep, PretrainRuns& runs) {
  std::vector<double> crl, rnd, rnd_pol;
  double seconds = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    for (auto [m, out] : {std::pair{explore::Method::kCRL, &crl}, std::pair{explore::Method::kRND, &rnd},
                          std::pair{explore::Method::kRandom, &rnd_pol}}) {
      const auto& r = runs.get(m, seed);
      out->push_back(r.final_tiles);
      seconds += r.seconds;
    }
  }
  const double c = eval::mean_stderr(crl).mean, d = eval::mean_stderr(rnd).mean, r = eval::mean_stderr(rnd_pol).mean;
  rep.line(4, c >= kExploreVsRandom * r && c >= kExploreVsRnd * d && seconds <= kExploreSeconds,
           "tiles/episode crl " + fmt(c) + ", random " + fmt(r) + ", rnd " + fmt(d) + " (ratios " + fmt(c / r, 3) +
               ", " + fmt(c / d, 3) + "), pretraining " + fmt(seconds, 4) + " s");
}

std::optional<rl::Policy> exploration_policy(const nn::Checkpoint& ckpt, explore::Method m) {
  if (m == explore::Method::kRandom) return std::nullopt;
  return explore::load_exploration_policy(ckpt);
}

explore::GatherConfig gather_config() { return cli::gather_config(cli::RunConfig{}); }

void criterion_5(Report& rep, PretrainRuns& runs) {
  const explore::RewarderConfig learner = cli::rewarder_config(cli::RunConfig{});
  int wins = 0;
  std::string detail;
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    double tail[2] = {0.0, 0.0};
    int k = 0;
    for (auto m : {explore::Method::kCRL, explore::Method::kRandom}) {
      const auto policy = exploration_policy(runs.get(m, seed).checkpoint, m);
      const auto losses =
          explore::gathered_data_contrastive_loss(policy ? &*policy : nullptr, gather_config(), learner, seed);
      const std::size_t from = losses.size() - static_cast<std::size_t>(std::ceil(kFinalUpdateShare * losses.size()));
      double s = 0.0;
      for (std::size_t j = from; j < losses.size(); ++j) s += losses[j];
      tail[k++] = s / static_cast<double>(losses.size() - from);
    }
    wins += tail[0] > tail[1];
    detail += fmt(tail[0]) + "/" + fmt(tail[1]) + " ";
    progress("gathered loss seed " + std::to_string(seed) + " crl " + fmt(tail[0]) + " random " + fmt(tail[1]));
  }
  rep.line(5, wins >= kSeedsRequired,
           std::to_string(wins) + "/5 seeds crl > random; final-quarter loss crl/random: " + detail);
}

void criterion_6(Report& rep, PretrainRuns& runs) {
  const eval::DiversityEmbedding emb = eval::make_diversity_embedding();
  explore::GatherConfig g = gather_config();
  g.frames = kDiversityFrames;
  std::vector<double> batches[2];
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    int k = 0;
    for (auto m : {explore::Method::kCRL, explore::Method::kRandom}) {
      const auto policy = exploration_policy(runs.get(m, seed).checkpoint, m);
      for (const auto& s : eval::gathered_diversity(policy ? &*policy : nullptr, g, kDiversityBatch, seed, emb)) {
        batches[k].push_back(s.mean);
      }
      ++k;
    }
  }
  const eval::MeanStderr a = eval::mean_stderr(batches[0]), b = eval::mean_stderr(batches[1]);
  const double pooled = std::sqrt(a.se * a.se + b.se * b.se);
  rep.line(6, a.mean - b.mean >= kDiversityStderrs * pooled,
           "diversity crl " + fmt(a.mean) + " +- " + fmt(a.se, 2) + ", random " + fmt(b.mean) + " +- " + fmt(b.se, 2) +
               " (" + std::to_string(a.n) + " batches each); gap " + fmt((a.mean - b.mean) / pooled, 3) +
               " pooled SE");
}

void criterion_7(Report& rep, PretrainRuns& runs) {
  const cli::RunConfig rc;
  const eval::ProbeConfig pc = cli::probe_config(rc);
  int wins = 0;
  std::string detail;
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    const eval::ProbeData data = eval::collect_probe_data(pc, derive_seed(seed, {11}));
    const explore::EncoderWeights crl = explore::load_representation(runs.get(explore::Method::kCRL, seed).checkpoint);
    const explore::EncoderWeights rnd = eval::random_encoder(rc.encoder, derive_seed(seed, {13}));
    const double a = eval::linear_probe(crl.params, crl.config, data, pc, derive_seed(seed, {12})).top1;
    const double b = eval::linear_probe(rnd.params, rnd.config, data, pc, derive_seed(seed, {12})).top1;
    wins += a - b >= kProbeMargin;
    detail += fmt(100 * a, 3) + "/" + fmt(100 * b, 3) + " ";
  }
  rep.line(7, wins >= kSeedsRequired,
           std::to_string(wins) + "/5 seeds with a >= 10 point gain; top-1 % crl/random-init: " + detail);
}

eval::NavConfig nav(world::TaskKind task, bool freeze) {
  cli::RunConfig rc;
  rc.run.task = task;
  rc.run.freeze = freeze;
  rc.run.nav_frames = kNavFrames;
  return cli::nav_config(rc);
}

void criterion_8(Report& rep, PretrainRuns& runs) {
  int wins = 0;
  std::string detail;
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    const explore::EncoderWeights enc = explore::load_representation(runs.get(explore::Method::kCRL, seed).checkpoint);
    const double frozen =
        eval::downstream_nav_train(enc, nav(world::TaskKind::kStyleGoal, true), seed).final_eval().metrics.soft_spl;
    const double tuned =
        eval::downstream_nav_train(enc, nav(world::TaskKind::kStyleGoal, false), seed).final_eval().metrics.soft_spl;
    wins += frozen > tuned;
    detail += fmt(frozen, 3) + "/" + fmt(tuned, 3) + " ";
    progress("style goal seed " + std::to_string(seed) + " frozen " + fmt(frozen, 3) + " unfrozen " + fmt(tuned, 3));
  }
  rep.line(8, wins >= kSeedsRequired, std::to_string(wins) + "/5 seeds frozen > unfrozen; SoftSPL frozen/unfrozen: " + detail);
}

void criterion_9(Report& rep) {
  const cli::RunConfig rc;
  int close = 0;
  std::string detail;
  for (int i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + static_cast<std::uint64_t>(i);
    const explore::EncoderWeights enc = eval::random_encoder(rc.encoder, derive_seed(seed, {13}));
    const double frozen =
        eval::downstream_nav_train(enc, nav(world::TaskKind::kPointGoal, true), seed).final_eval().metrics.spl;
    const double tuned =
        eval::downstream_nav_train(enc, nav(world::TaskKind::kPointGoal, false), seed).final_eval().metrics.spl;
    close += std::abs(frozen - tuned) < kPointGoalGap;
    detail += fmt(frozen, 3) + "/" + fmt(tuned, 3) + " ";
    progress("point goal seed " + std::to_string(seed) + " frozen " + fmt(frozen, 3) + " unfrozen " + fmt(tuned, 3));
  }
  rep.line(9, close >= kSeedsRequired, std::to_string(close) + "/5 seeds with |gap| < 0.05; SPL frozen/unfrozen: " + detail);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion_10(Report& rep) {
  const fs::path dir = fs::temp_directory_path() / "crl_acceptance_10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream sink;
  const std::string cfg = (dir / "run.ini").string();
  {
    cli::RunConfig rc;
    rc.world.width = 24;
    rc.world.height = 24;
    rc.world.min_rooms = 3;
    rc.world.max_rooms = 6;
    rc.ppo.num_envs = 4;
    rc.ppo.horizon = 64;
    rc.model_minibatch = 64;
    std::ofstream(cfg) << cli::to_text(rc);
  }
  bool csv_same = true;
  for (const char* method : {"crl", "rnd", "counts", "random"}) {
    std::vector<std::string> outs;
    for (const char* tag : {"a", "b"}) {
      const fs::path out = dir / (std::string(method) + "_" + tag);
      const int code = cli::run({"pretrain", "--config", cfg, "--rewarder", method, "--frames", "1024", "--seed", "3",
                                 "--out", out.string()},
                                sink, sink);
      csv_same = csv_same && code == 0;
      outs.push_back(slurp(out / "metrics.csv") + slurp(out / "checkpoint.crl"));
    }
    csv_same = csv_same && outs[0] == outs[1] && !outs[0].empty();
  }

  const fs::path ckpt_path = dir / "crl_a" / "checkpoint.crl";
  const std::string file = slurp(ckpt_path);
  const std::vector<std::uint8_t> bytes(file.begin(), file.end());
  bool round_trip = false;
  try {
    const nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
    nn::save_checkpoint(dir / "resaved.crl", ck);
    round_trip = nn::serialize(nn::deserialize(bytes)) == bytes && slurp(dir / "resaved.crl") == file;
  } catch (const Error&) {
    round_trip = false;
  }

  int damaged = 0, rejected = 0;
  const auto expect_rejection = [&](const std::vector<std::uint8_t>& b) {
    ++damaged;
    try {
      nn::deserialize(b);
    } catch (const FormatError&) {
      ++rejected;
    } catch (const VersionError&) {
      ++rejected;
    }
  };
  for (std::size_t len = 0; len < bytes.size(); len += 1 + bytes.size() / 400) {
    expect_rejection(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len)));
  }
  Rng rng(10);
  for (int i = 0; i < 400; ++i) {
    auto b = bytes;
    b[rng.below(b.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    expect_rejection(b);
  }
  rep.line(10, csv_same && round_trip && rejected == damaged,
           std::string("repeat runs identical: ") + (csv_same ? "yes" : "no") +
               ", checkpoint round trip byte-exact: " + (round_trip ? "yes" : "no") + ", damaged files rejected " +
               std::to_string(rejected) + "/" + std::to_string(damaged));
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Acceptance criteria 1-10", "crl_acceptance"};
  std::vector<int> only;
  std::string cache;
  bool strict = false;
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 10))->delimiter(',');
  app.add_option("--cache", cache, "Directory for reusable pretraining checkpoints");
  app.add_flag("--strict", strict, "Exit with status 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                              : std::set<int>(only.begin(), only.end());

  Report rep;
  PretrainRuns runs(cache.empty() ? std::nullopt : std::optional<fs::path>(cache));
  const auto t0 = Clock::now();
  try {
    for (int id : selected) {
      const auto t = Clock::now();
      switch (id) {
        case 1: criterion_1(rep); break;
        case 2: criterion_2(rep); break;
        case 3: criterion_3(rep); break;
        case 4: criterion_4(rep, runs); break;
        case 5: criterion_5(rep, runs); break;
        case 6: criterion_6(rep, runs); break;
        case 7: criterion_7(rep, runs); break;
        case 8: criterion_8(rep, runs); break;
        case 9: criterion_9(rep); break;
        case 10: criterion_10(rep); break;
      }
      progress("criterion " + std::to_string(id) + " took " + fmt(seconds_since(t), 4) + " s");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("summary: %d passed, %d failed, %.0f s\n", rep.passed, rep.failed, seconds_since(t0));
  return strict && rep.failed > 0 ? 1 : 0;
}
