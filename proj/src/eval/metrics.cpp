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

#include "crl/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "crl/common/error.hpp"

namespace crl::eval {

double spl(bool success, int shortest, int path_len) {
  if (!success) return 0.0;
  if (shortest <= 0) return 1.0;
  return static_cast<double>(shortest) / static_cast<double>(std::max(path_len, shortest));
}

double soft_spl(int d_init, int d_final, int shortest, int path_len) {
  if (d_init <= 0) throw DegenerateError("soft_spl: episode starts at the goal");
  const double progress = std::max(0.0, 1.0 - static_cast<double>(d_final) / static_cast<double>(d_init));
  const double efficiency =
      shortest <= 0 ? 1.0 : static_cast<double>(shortest) / static_cast<double>(std::max(path_len, shortest));
  return progress * efficiency;
}

NavMetrics nav_metrics(const world::EpisodeSummary& e) {
  NavMetrics m;
  m.success = e.success ? 1.0 : 0.0;
  m.spl = spl(e.success, e.initial_distance, e.path_length);
  m.soft_spl = soft_spl(e.initial_distance, e.final_distance, e.initial_distance, e.path_length);
  m.goal_distance = e.final_distance;
  return m;
}

NavMetrics mean_metrics(const std::vector<NavMetrics>& episodes) {
  NavMetrics out;
  if (episodes.empty()) return out;
  for (const auto& m : episodes) {
    out.success += m.success;
    out.spl += m.spl;
    out.soft_spl += m.soft_spl;
    out.goal_distance += m.goal_distance;
  }
  const double n = static_cast<double>(episodes.size());
  out.success /= n;
  out.spl /= n;
  out.soft_spl /= n;
  out.goal_distance /= n;
  return out;
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  r.n = static_cast<int>(xs.size());
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  return r;
}

}  // namespace crl::eval
