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

#include "crl/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"
#include "crl/worldsim/render.hpp"

namespace crl::eval {

using nn::Tensor;

void ProbeConfig::validate() const {
  world.validate();
  if (worlds.overlaps(world::kPretrainWorlds)) throw ConfigError("probe: worlds overlap the pretraining seed range");
  if (num_worlds < 2 || samples_per_world < 1) throw ConfigError("probe: need >= 2 worlds and >= 1 sample per world");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("probe: val_fraction must lie in (0, 1)");
  if (!(lr > 0.0f) || max_epochs < 1 || minibatch < 1) throw ConfigError("probe: bad optimizer settings");
}

ProbeData collect_probe_data(const ProbeConfig& config, std::uint64_t seed) {
  config.validate();
  ProbeData d;
  d.height = config.render.height;
  d.width = config.render.width;
  d.num_classes = config.world.num_style_classes;
  Rng rng(seed);
  const std::size_t fs = static_cast<std::size_t>(3 * d.height * d.width);
  d.frames.reserve(static_cast<std::size_t>(config.num_worlds * config.samples_per_world) * fs);
  for (int w = 0; w < config.num_worlds; ++w) {
    const std::uint64_t ws = config.worlds.base + rng.below(config.worlds.count);
    const world::WorldSpec spec = world::generate_world(ws, config.world);
    const auto cells = spec.free_cells();
    for (int s = 0; s < config.samples_per_world; ++s) {
      world::AgentState st;
      st.cell = cells[rng.below(cells.size())];
      st.heading = static_cast<world::Heading>(rng.below(4));
      const world::Observation obs = world::render(spec, st, config.render);
      d.frames.insert(d.frames.end(), obs.pixels.begin(), obs.pixels.end());
      d.labels.push_back(world::style_class_at(spec, st));
      d.world_index.push_back(w);
    }
  }
  return d;
}

namespace {

Tensor rows(const std::vector<float>& x, const std::vector<std::size_t>& idx, std::size_t dim) {
  std::vector<float> out(idx.size() * dim);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(idx[k] * dim), dim,
                out.begin() + static_cast<std::ptrdiff_t>(k * dim));
  }
  return Tensor({idx.size(), dim}, std::move(out));
}

Tensor xent(const Tensor& logits, const std::vector<int>& y) {
  return nn::scale(nn::sum(nn::pick(nn::log_softmax(logits), y)), -1.0f / static_cast<float>(y.size()));
}

}  // namespace

ProbeResult train_linear_probe(const std::vector<float>& train_x, const std::vector<int>& train_y,
                               const std::vector<float>& val_x, const std::vector<int>& val_y, std::size_t dim,
                               int num_classes, const ProbeConfig& config, std::uint64_t seed) {
  const std::size_t n = train_y.size(), nv = val_y.size();
  if (n == 0 || nv == 0) throw ConfigError("probe: empty train or validation split");
  if (train_x.size() != n * dim || val_x.size() != nv * dim) throw ShapeError("probe: feature size mismatch");
  if (num_classes < 2) throw ConfigError("probe: need at least two classes");

  // Standardize with train statistics.
  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) mu[j] += train_x[i * dim + j];
  }
  for (double& m : mu) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) sd[j] += (train_x[i * dim + j] - mu[j]) * (train_x[i * dim + j] - mu[j]);
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(n)) + 1e-6;
  auto standardized = [&](const std::vector<float>& x) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>((x[i] - mu[i % dim]) / sd[i % dim]);
    return out;
  };
  const std::vector<float> tx = standardized(train_x);
  const Tensor vx({nv, dim}, standardized(val_x));

  Rng rng(seed);
  nn::ParamSet head;
  nn::add_dense(head, "probe", dim, static_cast<std::size_t>(num_classes), rng);
  nn::AdamState opt;
  opt.config.lr = config.lr;

  auto val_loss = [&]() {
    nn::NoGradGuard ng;
    return static_cast<double>(xent(nn::apply_dense(head, "probe", vx), val_y).item());
  };

  ProbeResult r;
  r.train_size = n;
  r.val_size = nv;
  nn::ParamSet best = head.clone();
  double best_loss = val_loss();
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(config.minibatch)) {
      const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(config.minibatch));
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                         order.begin() + static_cast<std::ptrdiff_t>(hi));
      std::vector<int> y(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) y[k] = train_y[idx[k]];
      xent(nn::apply_dense(head, "probe", rows(tx, idx, dim)), y).backward();
      nn::adam_step(head, opt);
    }
    r.epochs = epoch + 1;
    const double l = val_loss();
    if (l > best_loss) break;
    best_loss = l;
    best.copy_values_from(head);
  }

  nn::NoGradGuard ng;
  const Tensor logits = nn::apply_dense(best, "probe", vx);
  const auto pred = [&](std::size_t i) {
    const auto row = logits.data().subspan(i * static_cast<std::size_t>(num_classes), static_cast<std::size_t>(num_classes));
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  };
  std::vector<double> hits(static_cast<std::size_t>(num_classes), 0.0), seen(static_cast<std::size_t>(num_classes), 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < nv; ++i) {
    const bool ok = pred(i) == val_y[i];
    correct += ok ? 1.0 : 0.0;
    seen[static_cast<std::size_t>(val_y[i])] += 1.0;
    hits[static_cast<std::size_t>(val_y[i])] += ok ? 1.0 : 0.0;
  }
  r.top1 = correct / static_cast<double>(nv);
  r.per_class.resize(static_cast<std::size_t>(num_classes));
  for (std::size_t c = 0; c < r.per_class.size(); ++c) r.per_class[c] = seen[c] > 0 ? hits[c] / seen[c] : 0.0;
  return r;
}

std::vector<float> probe_features(const nn::ParamSet& encoder, const nn::EncoderConfig& config,
                                  const ProbeData& data) {
  nn::NoGradGuard ng;
  const std::size_t n = data.size();
  const Tensor x({n, 3, static_cast<std::size_t>(data.height), static_cast<std::size_t>(data.width)}, data.frames);
  const Tensor f = nn::encode(encoder, config, x);
  return {f.data().begin(), f.data().end()};
}

ProbeResult linear_probe(const nn::ParamSet& encoder, const nn::EncoderConfig& config, const ProbeData& data,
                         const ProbeConfig& probe, std::uint64_t seed) {
  const std::vector<float> feats = probe_features(encoder, config, data);
  const std::size_t dim = config.feature_dim();
  const int val_from = probe.num_worlds - std::max(1, static_cast<int>(std::lround(probe.val_fraction * probe.num_worlds)));
  std::vector<float> tx, vx;
  std::vector<int> ty, vy;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool val = data.world_index[i] >= val_from;
    auto& x = val ? vx : tx;
    x.insert(x.end(), feats.begin() + static_cast<std::ptrdiff_t>(i * dim),
             feats.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    (val ? vy : ty).push_back(data.labels[i]);
  }
  return train_linear_probe(tx, ty, vx, vy, dim, data.num_classes, probe, seed);
}

}  // namespace crl::eval
