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

#ifndef CRL_TESTS_SUPPORT_GRADCHECK_HPP_
#define CRL_TESTS_SUPPORT_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crl/common/rng.hpp"
#include "crl/numerics/tensor.hpp"

namespace crl::testing {

// One differentiable op under test: a generator for random inputs and the
// forward function. Inputs flagged in `differentiable` are perturbed.
struct OpCase {
  std::string name;
  std::function<std::vector<nn::Tensor>(Rng&)> make_inputs;
  std::function<nn::Tensor(const std::vector<nn::Tensor>&)> forward;
  std::vector<bool> differentiable;
};

struct GradCheckResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst_rel_error = 0.0;
};

// Relative error of one case is ||g_analytic - g_numeric|| /
// max(||g_analytic||, ||g_numeric||, 1) over all perturbed inputs, with
// central differences of step h on the projected loss sum(w * f(x)).
GradCheckResult check_op(const OpCase& op, int cases, std::uint64_t seed,
                         double h = 1e-3, double tolerance = 1e-3);

// Every differentiable op exposed by the numerics module, plus the GRU cell.
std::vector<OpCase> all_op_cases();

}  // namespace crl::testing

#endif  // CRL_TESTS_SUPPORT_GRADCHECK_HPP_
