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

#ifndef CRL_COMMON_RNG_HPP_
#define CRL_COMMON_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace crl {

// SplitMix64 finalizer. Used to derive independent stream seeds from a base
// seed and a list of tags (iteration, env index, step, ...).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> tags);

// Thin wrapper over mt19937_64. All distributions are implemented here rather
// than through <random> distributions, whose output is implementation-defined,
// so streams are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller (no cached second value, so the state is
  // fully described by the engine).
  double normal();
  // Categorical draw from unnormalized nonnegative weights.
  template <typename Range>
  std::size_t categorical(const Range& weights);

  std::string serialize() const;
  void deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

template <typename Range>
std::size_t Rng::categorical(const Range& weights) {
  double total = 0.0;
  for (auto w : weights) total += static_cast<double>(w);
  double u = uniform() * total;
  std::size_t i = 0;
  std::size_t last = 0;
  for (auto w : weights) {
    if (static_cast<double>(w) > 0.0) last = i;
    u -= static_cast<double>(w);
    if (u < 0.0) return i;
    ++i;
  }
  return last;
}

}  // namespace crl

#endif  // CRL_COMMON_RNG_HPP_
