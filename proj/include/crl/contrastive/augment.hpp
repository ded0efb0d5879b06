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

#ifndef CRL_CONTRASTIVE_AUGMENT_HPP_
#define CRL_CONTRASTIVE_AUGMENT_HPP_

#include <utility>

#include "crl/common/rng.hpp"
#include "crl/worldsim/render.hpp"

namespace crl::contrastive {

struct AugmentationConfig {
  float flip_prob = 0.5f;
  // Crop area as a fraction of the image; the crop keeps the aspect ratio.
  float crop_min = 0.6f;
  float crop_max = 1.0f;
  // Brightness and saturation factors are drawn from [1 - s, 1 + s].
  float jitter = 0.4f;

  void validate() const;
  bool operator==(const AugmentationConfig&) const = default;
};

// What one augmentation did; exposed for tests.
struct AugmentParams {
  bool flip = false;
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
  float brightness = 1.0f;
  float saturation = 1.0f;
};

AugmentParams sample_augment(int height, int width, const AugmentationConfig& cfg, Rng& rng);

// Writes one augmented view of a CHW image into `out` (same size). `in` and
// `out` must not alias.
void apply_augment(const float* in, int height, int width, const AugmentParams& p, float* out);

world::Observation augment(const world::Observation& x, const AugmentationConfig& cfg, Rng& rng);
std::pair<world::Observation, world::Observation> augment_pair(const world::Observation& x,
                                                               const AugmentationConfig& cfg,
                                                               Rng& rng);

world::Observation flip_horizontal(const world::Observation& x);

}  // namespace crl::contrastive

#endif  // CRL_CONTRASTIVE_AUGMENT_HPP_
