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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "crl/cli/commands.hpp"
#include "crl/cli/config.hpp"
#include "crl/cli/output.hpp"
#include "crl/common/error.hpp"
#include "crl/numerics/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace crl;
using namespace crl::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* const kSmallConfig =
    "[world]\nwidth = 16\nheight = 16\nmin_rooms = 2\nmax_rooms = 3\nepisode_length = 40\n"
    "[encoder]\nchannels = 4,4,8,8\npolicy_channels = 4,4,8,8\npolicy_hidden = 8\n"
    "[ppo]\nnum_envs = 2\nhorizon = 32\nepochs = 1\n"
    "[contrastive]\nmodel_minibatch = 16\nmodel_epochs = 1\n"
    "[run]\nnav_envs = 2\neval_every = 64\neval_episodes = 4\ngather_frames = 128\ndiversity_batch = 8\n"
    "probe_worlds = 4\nprobe_samples_per_world = 8\n";

fs::path small_config(const fs::path& dir) {
  const fs::path p = dir / "small.ini";
  write_text(p, kSmallConfig);
  return p;
}

// Tag-balance check: every element opened is closed in order.
bool well_formed_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string::npos) {
    const std::size_t j = s.find('>', i);
    if (j == std::string::npos) return false;
    const std::string tag = s.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const std::string name = tag.substr(tag[0] == '/' ? 1 : 0, tag.find_first_of(" \t\n/", 1) - (tag[0] == '/' ? 1 : 0));
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("default config round-trips to canonical text") {
  const std::string text = to_text(RunConfig{});
  CHECK(to_text(parse_config(text)) == text);
  CHECK(text.find("[world]") == 0);
  for (const char* s : {"[encoder]", "[ppo]", "[contrastive]", "[run]"}) CHECK(text.find(s) != std::string::npos);
  CHECK(text.find("temperature = 0.07\n") != std::string::npos);
  CHECK(text.find("\nlr = 1e-04\n") != std::string::npos);
}

TEST_CASE("parsed values land in the config and survive a second round trip") {
  const RunConfig c = parse_config(
      "# comment\n[ppo]\nlr = 0.1\ngamma=0.9\n\n[encoder]\nchannels = 2, 4,6,8\n[run]\nrewarder = rnd\n"
      "freeze = false\ntask = point\nmode = biological\nseed = 18446744073709551615\ncheckpoint = a b.crl\n");
  CHECK(c.ppo.lr == 0.1f);
  CHECK(c.ppo.gamma == 0.9f);
  CHECK(c.encoder.channels == std::vector<std::size_t>{2, 4, 6, 8});
  CHECK(c.run.rewarder == explore::Method::kRND);
  CHECK_FALSE(c.run.freeze);
  CHECK(c.run.task == world::TaskKind::kPointGoal);
  CHECK(c.run.mode == explore::RunMode::kBiological);
  CHECK(c.run.seed == 18446744073709551615ULL);
  CHECK(c.run.checkpoint == "a b.crl");
  const std::string text = to_text(c);
  CHECK(to_text(parse_config(text)) == text);
}

TEST_CASE("malformed configs are rejected with a ConfigError") {
  CHECK_THROWS_AS(parse_config("[ppo]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[physics]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lr = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ppo]\nlr = 1\nlr = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ppo]\nlr = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ppo]\nhorizon = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nfreeze = yes\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ppo\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[ppo]\nlr\n"), ConfigError);
  std::string message;
  try {
    parse_config("[world]\nwidth = 8\n[ppo]\nnope = 1\n");
  } catch (const ConfigError& e) {
    message = e.what();
  }
  CHECK(message.find("line 4") != std::string::npos);
  RunConfig c;
  c.ppo.clip = -1.0f;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("metrics log refuses non-finite values") {
  const fs::path dir = scratch("log");
  {
    MetricsLog log(dir / "m.csv", {"a", "b"});
    log.append({1.0, 0.5});
    CHECK_THROWS_AS(log.append({2.0, std::nan("")}), IOError);
    CHECK_THROWS_AS(log.append({1.0}), IOError);
    log.append({3.0, 0.25});
  }
  CHECK(slurp(dir / "m.csv") == "a,b\n1,0.5\n3,0.25\n");
  const Table t = read_csv(dir / "m.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.column(1) == std::vector<double>{0.5, 0.25});
}

TEST_CASE("SVG charts") {
  const std::string one = svg_chart({5.0}, {2.0}, "x", "y");
  CHECK(one.find("<circle") != std::string::npos);
  CHECK(one.find("<polyline") == std::string::npos);
  CHECK(well_formed_xml(one));
  const std::string many = svg_chart({0, 1, 2}, {3, 1, 2}, "frames", "loss & <rate>");
  CHECK(many.find("<polyline") != std::string::npos);
  CHECK(many.find("loss &amp; &lt;rate&gt;") != std::string::npos);
  CHECK(well_formed_xml(many));
  CHECK_FALSE(well_formed_xml("<svg><g></svg></g>"));
}

TEST_CASE("plot writes one chart per metric column") {
  const fs::path dir = scratch("plot");
  {
    MetricsLog log(dir / "m.csv", {"step", "a", "b", "c"});
    log.append({0, 1, 2, 3});
  }
  const Outcome o = invoke({"plot", "--out", dir.string()});
  CHECK(o.code == 0);
  int charts = 0;
  for (const char* col : {"a", "b", "c"}) {
    const fs::path p = dir / (std::string("m_") + col + ".svg");
    REQUIRE(fs::exists(p));
    const std::string svg = slurp(p);
    CHECK(well_formed_xml(svg));
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(svg.find(std::string(">") + col + "</text>") != std::string::npos);
    ++charts;
  }
  CHECK(charts == 3);
}

TEST_CASE("usage and config errors exit with code 2") {
  const fs::path dir = scratch("errors");
  Outcome o = invoke({"pretrain", "--rewarder", "bogus", "--out", dir.string()});
  CHECK(o.code == 2);
  CHECK(o.err.find("--rewarder") != std::string::npos);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"train"}).code == 2);
  CHECK(invoke({"nav", "--freeze", "maybe"}).code == 2);
  write_text(dir / "bad.ini", "[ppo]\nwarp = 9\n");
  o = invoke({"pretrain", "--config", (dir / "bad.ini").string(), "--out", dir.string()});
  CHECK(o.code == 2);
  CHECK(o.err.find("warp") != std::string::npos);
  write_text(dir / "invalid.ini", "[ppo]\nnum_envs = 0\n");
  CHECK(invoke({"pretrain", "--config", (dir / "invalid.ini").string(), "--out", dir.string()}).code == 2);
  CHECK(invoke({"pretrain", "--frames", "10", "--out", dir.string()}).code == 1);
}

TEST_CASE("pretrain is reproducible and its checkpoint feeds the evaluators") {
  const fs::path dir = scratch("pretrain");
  const std::string cfg = small_config(dir).string();
  const std::vector<std::string> base = {"pretrain", "--config", cfg, "--rewarder", "crl", "--frames", "128",
                                         "--seed", "1", "--out"};
  auto a_args = base, b_args = base;
  a_args.push_back((dir / "a").string());
  b_args.push_back((dir / "b").string());
  REQUIRE(invoke(a_args).code == 0);
  REQUIRE(invoke(b_args).code == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  CHECK(slurp(dir / "a" / "checkpoint.crl") == slurp(dir / "b" / "checkpoint.crl"));
  CHECK(fs::exists(dir / "a" / "samples.ppm"));

  const std::string snapshot = slurp(dir / "a" / "config.ini");
  CHECK(snapshot.find("pretrain_frames = 128\n") != std::string::npos);
  CHECK(snapshot.find("width = 16\n") != std::string::npos);
  CHECK(to_text(parse_config(snapshot)) == snapshot);

  const std::string ckpt = (dir / "a" / "checkpoint.crl").string();
  for (const char* cmd : {"probe", "diversity", "gathered-loss"}) {
    const Outcome o = invoke({cmd, "--config", cfg, "--checkpoint", ckpt, "--out", (dir / cmd).string()});
    CHECK_MESSAGE(o.code == 0, cmd << ": " << o.err);
  }
  const Outcome nav = invoke({"nav", "--config", cfg, "--checkpoint", ckpt, "--task", "point", "--frames", "128",
                              "--freeze", "false", "--out", (dir / "nav").string()});
  CHECK_MESSAGE(nav.code == 0, nav.err);
  const Table t = read_csv(dir / "nav" / "nav.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.rows.back()[0] == 128.0);
}

TEST_CASE("damaged checkpoints fail cleanly") {
  const fs::path dir = scratch("damaged");
  const std::string cfg = small_config(dir).string();
  REQUIRE(invoke({"pretrain", "--config", cfg, "--frames", "64", "--out", (dir / "run").string()}).code == 0);
  const std::string bytes = slurp(dir / "run" / "checkpoint.crl");
  write_text(dir / "truncated.crl", bytes.substr(0, bytes.size() / 2));
  std::string flipped = bytes;
  flipped[4] = static_cast<char>(flipped[4] ^ 0x7f);
  write_text(dir / "version.crl", flipped);
  for (const char* name : {"truncated.crl", "version.crl", "missing.crl"}) {
    const Outcome o = invoke({"probe", "--config", cfg, "--checkpoint", (dir / name).string(), "--out",
                              (dir / "probe").string()});
    CHECK(o.code == 1);
    CHECK(o.err.find("error") != std::string::npos);
  }
  CHECK_THROWS_AS(nn::load_checkpoint(dir / "truncated.crl"), FormatError);
  CHECK_THROWS_AS(nn::load_checkpoint(dir / "version.crl"), VersionError);
}

TEST_CASE("worldview renders the map and views") {
  const fs::path dir = scratch("worldview");
  const Outcome o = invoke({"worldview", "--config", small_config(dir).string(), "--seed", "4", "--out", dir.string()});
  CHECK(o.code == 0);
  CHECK(slurp(dir / "world.ppm").rfind("P6", 0) == 0);
  CHECK(slurp(dir / "views.ppm").rfind("P6", 0) == 0);
}
