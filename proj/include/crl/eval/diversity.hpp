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

#ifndef CRL_EVAL_DIVERSITY_HPP_
#define CRL_EVAL_DIVERSITY_HPP_

#include <cstdint>
#include <vector>

#include "crl/crl/gathered.hpp"
#include "crl/crl/pretrain.hpp"
#include "crl/numerics/layers.hpp"
#include "crl/numerics/params.hpp"

namespace crl::eval {

// Perceptual-distance proxy: a fixed, randomly initialized encoder.
struct DiversityEmbedding {
  nn::EncoderConfig config;
  nn::ParamSet params;
};
inline constexpr std::uint64_t kDiversityEmbeddingSeed = 0x0d1e5e11ULL;
DiversityEmbedding make_diversity_embedding(std::uint64_t seed = kDiversityEmbeddingSeed);

struct DiversityScore {
  double mean = 0.0;  // mean pairwise Euclidean distance between embeddings
  double se = 0.0;    // standard error over pairs
  std::size_t pairs = 0;
};

// Throws BatchError for fewer than two frames.
DiversityScore diversity(const std::vector<const float*>& frames, int height, int width,
                         const DiversityEmbedding& embedding);

// Diversity of `batch` frames drawn without replacement from each rollout
// gathered by `policy` (uniform random actions when null).
std::vector<DiversityScore> gathered_diversity(const rl::Policy* policy, const explore::GatherConfig& config,
                                               int batch, std::uint64_t seed, const DiversityEmbedding& embedding);

struct CurvePoint {
  std::uint64_t frames = 0;
  double mean = 0.0;
  double se = 0.0;
};

// Tiles explored per episode across seeds at each logging step. Runs must
// share the iteration schedule.
std::vector<CurvePoint> exploration_curve(const std::vector<explore::PretrainResult>& runs);

}  // namespace crl::eval

#endif  // CRL_EVAL_DIVERSITY_HPP_
