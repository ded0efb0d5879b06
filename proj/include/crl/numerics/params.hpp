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

#ifndef CRL_NUMERICS_PARAMS_HPP_
#define CRL_NUMERICS_PARAMS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/numerics/tensor.hpp"

namespace crl::nn {

// Ordered, uniquely named collection of trainable tensors. Freezing clears
// requires_grad on every member so no gradient is recorded for them and any
// optimizer step on the set is refused.
class ParamSet {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor tensor);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen);

  void zero_grad();
  // Deep copy: same names and values, independent storage, no grads.
  ParamSet clone() const;
  // Overwrites values from a set with identical names and shapes.
  void copy_values_from(const ParamSet& other);
  // Byte-level equality of the values (grads ignored).
  bool values_equal(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
  bool frozen_ = false;
};

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<float>> first_moment;
  std::map<std::string, std::vector<float>> second_moment;
};

// One bias-corrected Adam update over every member that holds a gradient;
// gradients are cleared afterwards. Throws FrozenError on a frozen set and
// leaves it untouched.
void adam_step(ParamSet& params, AdamState& state);

// Rescales all gradients in `sets` so their global L2 norm is at most
// max_norm. Returns the norm before clipping.
float clip_grad_norm(const std::vector<ParamSet*>& sets, float max_norm);

// Initializers.
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);
Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng, float gain = 1.0f);

// Input-to-output linear layer parameters "<prefix>.weight" [out, in] and
// "<prefix>.bias" [out].
void add_dense(ParamSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& rng, float weight_scale = 1.0f);
Tensor apply_dense(const ParamSet& params, const std::string& prefix,
                   const Tensor& x);

}  // namespace crl::nn

#endif  // CRL_NUMERICS_PARAMS_HPP_
