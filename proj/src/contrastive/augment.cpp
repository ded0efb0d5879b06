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

#include "crl/contrastive/augment.hpp"

#include <algorithm>
#include <cmath>

#include "crl/common/error.hpp"

namespace crl::contrastive {

void AugmentationConfig::validate() const {
  if (flip_prob < 0.0f || flip_prob > 1.0f) throw ConfigError("augment: flip_prob must lie in [0, 1]");
  if (!(crop_min > 0.0f) || crop_max > 1.0f || crop_min > crop_max) {
    throw ConfigError("augment: crop scale range must satisfy 0 < min <= max <= 1");
  }
  if (jitter < 0.0f || jitter >= 1.0f) throw ConfigError("augment: jitter must lie in [0, 1)");
}

AugmentParams sample_augment(int height, int width, const AugmentationConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.flip = rng.bernoulli(cfg.flip_prob);
  const double area = rng.uniform(cfg.crop_min, cfg.crop_max);
  const double side = std::sqrt(area);
  p.crop_h = std::clamp(static_cast<int>(std::lround(height * side)), 1, height);
  p.crop_w = std::clamp(static_cast<int>(std::lround(width * side)), 1, width);
  p.crop_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - p.crop_h + 1)));
  p.crop_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - p.crop_w + 1)));
  p.brightness = static_cast<float>(rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter));
  p.saturation = static_cast<float>(rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter));
  return p;
}

void apply_augment(const float* in, int height, int width, const AugmentParams& p, float* out) {
  const std::size_t plane = static_cast<std::size_t>(height * width);
  // Nearest-neighbour resize of the crop back to full size, then flip.
  for (int y = 0; y < height; ++y) {
    const int sy = p.crop_y + std::min(p.crop_h - 1, (2 * y + 1) * p.crop_h / (2 * height));
    for (int x = 0; x < width; ++x) {
      const int dx = p.flip ? width - 1 - x : x;
      const int sx = p.crop_x + std::min(p.crop_w - 1, (2 * x + 1) * p.crop_w / (2 * width));
      const std::size_t src = static_cast<std::size_t>(sy * width + sx);
      const std::size_t dst = static_cast<std::size_t>(y * width + dx);
      for (std::size_t c = 0; c < 3; ++c) out[c * plane + dst] = in[c * plane + src];
    }
  }
  if (p.saturation == 1.0f && p.brightness == 1.0f) return;
  for (std::size_t i = 0; i < plane; ++i) {
    float r = out[i], g = out[plane + i], b = out[2 * plane + i];
    if (p.saturation != 1.0f) {
      const float gray = 0.299f * r + 0.587f * g + 0.114f * b;
      r = gray + p.saturation * (r - gray);
      g = gray + p.saturation * (g - gray);
      b = gray + p.saturation * (b - gray);
    }
    out[i] = std::clamp(r * p.brightness, 0.0f, 1.0f);
    out[plane + i] = std::clamp(g * p.brightness, 0.0f, 1.0f);
    out[2 * plane + i] = std::clamp(b * p.brightness, 0.0f, 1.0f);
  }
}

world::Observation augment(const world::Observation& x, const AugmentationConfig& cfg, Rng& rng) {
  world::Observation out(x.height, x.width);
  apply_augment(x.pixels.data(), x.height, x.width, sample_augment(x.height, x.width, cfg, rng),
                out.pixels.data());
  return out;
}

std::pair<world::Observation, world::Observation> augment_pair(const world::Observation& x,
                                                               const AugmentationConfig& cfg,
                                                               Rng& rng) {
  world::Observation a = augment(x, cfg, rng);
  world::Observation b = augment(x, cfg, rng);
  return {std::move(a), std::move(b)};
}

world::Observation flip_horizontal(const world::Observation& x) {
  world::Observation out(x.height, x.width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < x.height; ++y) {
      for (int i = 0; i < x.width; ++i) out.at(c, y, x.width - 1 - i) = x.at(c, y, i);
    }
  }
  return out;
}

}  // namespace crl::contrastive
