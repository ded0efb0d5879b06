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

#ifndef CRL_EVAL_METRICS_HPP_
#define CRL_EVAL_METRICS_HPP_

#include <vector>

#include "crl/worldsim/env.hpp"

namespace crl::eval {

// success * shortest / max(path_len, shortest); a zero shortest path counts
// as a trivial success.
double spl(bool success, int shortest, int path_len);

// max(0, 1 - d_final / d_init) * shortest / max(path_len, shortest).
// Throws DegenerateError when d_init is 0.
double soft_spl(int d_init, int d_final, int shortest, int path_len);

struct NavMetrics {
  double success = 0.0;
  double spl = 0.0;
  double soft_spl = 0.0;
  double goal_distance = 0.0;
};

// Per-episode metrics, taking the spawn-to-goal geodesic as the shortest path.
NavMetrics nav_metrics(const world::EpisodeSummary& episode);
NavMetrics mean_metrics(const std::vector<NavMetrics>& episodes);

struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};
// Sample mean and standard error (sample std / sqrt(n); 0 for n < 2).
MeanStderr mean_stderr(const std::vector<double>& xs);

}  // namespace crl::eval

#endif  // CRL_EVAL_METRICS_HPP_
