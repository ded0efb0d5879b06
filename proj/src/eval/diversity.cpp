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

#include "crl/eval/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crl/common/error.hpp"
#include "crl/crl/rewarders.hpp"
#include "crl/eval/metrics.hpp"

namespace crl::eval {

DiversityEmbedding make_diversity_embedding(std::uint64_t seed) {
  DiversityEmbedding e;
  Rng rng(seed);
  e.params = nn::build_encoder(e.config, rng);
  e.params.set_frozen(true);
  return e;
}

DiversityScore diversity(const std::vector<const float*>& frames, int height, int width,
                         const DiversityEmbedding& embedding) {
  const std::size_t n = frames.size();
  if (n < 2) throw BatchError("diversity: need at least two images, got " + std::to_string(n));
  nn::NoGradGuard ng;
  // One image per pass: batched GEMM rounding depends on the row position,
  // and the embedding must be a function of the image alone.
  std::vector<float> f;
  for (const float* frame : frames) {
    const nn::Tensor e = nn::encode(embedding.params, embedding.config, explore::frame_batch({frame}, height, width));
    f.insert(f.end(), e.data().begin(), e.data().end());
  }
  const std::size_t d = embedding.config.feature_dim();
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = static_cast<double>(f[i * d + k]) - f[j * d + k];
        s += diff * diff;
      }
      dists.push_back(std::sqrt(s));
    }
  }
  const MeanStderr ms = mean_stderr(dists);
  return {ms.mean, ms.se, dists.size()};
}

std::vector<DiversityScore> gathered_diversity(const rl::Policy* policy, const explore::GatherConfig& config,
                                               int batch, std::uint64_t seed, const DiversityEmbedding& embedding) {
  Rng pick(derive_seed(seed, {5}));
  std::vector<DiversityScore> out;
  explore::gather(policy, config, seed, [&](const rl::RolloutBuffer& b) {
    if (static_cast<std::size_t>(batch) > b.size()) throw BatchError("diversity: batch larger than a rollout");
    std::vector<std::size_t> idx(b.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(batch); ++i) {
      std::swap(idx[i], idx[i + pick.below(idx.size() - i)]);
    }
    std::vector<const float*> frames;
    for (int i = 0; i < batch; ++i) frames.push_back(b.frame(idx[static_cast<std::size_t>(i)]));
    out.push_back(diversity(frames, config.env.render.height, config.env.render.width, embedding));
  });
  return out;
}

std::vector<CurvePoint> exploration_curve(const std::vector<explore::PretrainResult>& runs) {
  std::vector<CurvePoint> out;
  if (runs.empty()) return out;
  const std::size_t steps = runs.front().metrics.size();
  for (const auto& r : runs) {
    if (r.metrics.size() != steps) throw ConfigError("exploration_curve: runs differ in length");
  }
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(r.metrics[s].tiles_explored);
    const MeanStderr ms = mean_stderr(xs);
    out.push_back({runs.front().metrics[s].frames, ms.mean, ms.se});
  }
  return out;
}

}  // namespace crl::eval
