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

#ifndef CRL_CRL_GATHERED_HPP_
#define CRL_CRL_GATHERED_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "crl/crl/rewarders.hpp"
#include "crl/rl/policy.hpp"
#include "crl/worldsim/env.hpp"

namespace crl::explore {

struct GatherConfig {
  world::EnvConfig env;
  int num_envs = 16;
  int horizon = 128;
  std::uint64_t frames = 65536;
};

// Runs a frozen exploration policy (uniform random actions when `policy` is
// null) and hands each rollout's observations to `sink` in buffer order.
void gather(const rl::Policy* policy, const GatherConfig& config, std::uint64_t seed,
            const std::function<void(const rl::RolloutBuffer&)>& sink);

// Trains a fresh contrastive model on the stream gathered by `policy` and
// returns the InfoNCE loss of every update. The model initialization and the
// augmentation streams depend only on `seed`, so two policies are compared on
// equal terms.
std::vector<float> gathered_data_contrastive_loss(const rl::Policy* policy, const GatherConfig& config,
                                                  const RewarderConfig& learner, std::uint64_t seed);

}  // namespace crl::explore

#endif  // CRL_CRL_GATHERED_HPP_
