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

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crl/numerics/layers.hpp"
#include "crl/numerics/ops.hpp"
#include "crl/numerics/params.hpp"

namespace crl::testing {

namespace {

using nn::Shape;
using nn::Tensor;

Tensor randn(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.normal() * scale);
  return t;
}

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Values bounded away from zero, for ops with a kink there.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.05, 1.5);
    v = static_cast<float>(rng.bernoulli(0.5) ? mag : -mag);
  }
  return t;
}

// Distinct values spaced at least 0.02 apart, shuffled.
Tensor distinct(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const std::size_t n = t.numel();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::size_t i = 0; i < n; ++i) {
    t.data()[i] = static_cast<float>(0.03 * static_cast<double>(order[i]) -
                                     0.015 * static_cast<double>(n) +
                                     rng.uniform(-0.005, 0.005));
  }
  return t;
}

std::size_t dim_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

double projected(const Tensor& y, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * static_cast<double>(y.data()[i]);
  return acc;
}

OpCase unary_case(std::string name, Tensor (*fn)(const Tensor&),
                  std::function<Tensor(Shape, Rng&)> gen) {
  return {std::move(name),
          [gen](Rng& rng) {
            return std::vector<Tensor>{
                gen({dim_between(rng, 1, 4), dim_between(rng, 1, 6)}, rng)};
          },
          [fn](const std::vector<Tensor>& in) { return fn(in[0]); },
          {true}};
}

Shape rand_matrix(Rng& rng) { return {dim_between(rng, 1, 4), dim_between(rng, 1, 6)}; }

}  // namespace

GradCheckResult check_op(const OpCase& op, int cases, std::uint64_t seed, double h,
                         double tolerance) {
  GradCheckResult result;
  result.name = op.name;
  Rng rng(derive_seed(seed, {std::hash<std::string>{}(op.name)}));
  for (int c = 0; c < cases; ++c) {
    std::vector<Tensor> inputs = op.make_inputs(rng);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      inputs[i].set_requires_grad(op.differentiable[i]);
    }
    Tensor y = op.forward(inputs);
    std::vector<double> w(y.numel());
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);

    std::vector<float> wf(w.begin(), w.end());
    Tensor loss = nn::sum(nn::mul(y, Tensor(y.shape(), wf)));
    loss.backward();

    double diff2 = 0.0, ana2 = 0.0, num2 = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!op.differentiable[i]) continue;
      Tensor& x = inputs[i];
      std::vector<float> analytic(x.numel(), 0.0f);
      if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
      nn::NoGradGuard no_grad;
      for (std::size_t j = 0; j < x.numel(); ++j) {
        const float original = x.data()[j];
        const float xp = static_cast<float>(original + h);
        const float xm = static_cast<float>(original - h);
        x.data()[j] = xp;
        const double lp = projected(op.forward(inputs), w);
        x.data()[j] = xm;
        const double lm = projected(op.forward(inputs), w);
        x.data()[j] = original;
        const double numeric =
            (lp - lm) / (static_cast<double>(xp) - static_cast<double>(xm));
        const double d = numeric - analytic[j];
        diff2 += d * d;
        ana2 += static_cast<double>(analytic[j]) * analytic[j];
        num2 += numeric * numeric;
      }
    }
    const double denom = std::max({std::sqrt(ana2), std::sqrt(num2), 1.0});
    const double rel = std::sqrt(diff2) / denom;
    ++result.cases;
    if (!(rel < tolerance)) ++result.failures;
    result.worst_rel_error = std::max(result.worst_rel_error, rel);
  }
  return result;
}

std::vector<OpCase> all_op_cases() {
  std::vector<OpCase> ops;
  const auto normal = [](Shape s, Rng& rng) { return randn(std::move(s), rng); };

  const auto binary = [](std::string name, Tensor (*fn)(const Tensor&, const Tensor&)) {
    return OpCase{std::move(name),
                  [](Rng& rng) {
                    Shape s = rand_matrix(rng);
                    return std::vector<Tensor>{randn(s, rng), randn(s, rng)};
                  },
                  [fn](const std::vector<Tensor>& in) { return fn(in[0], in[1]); },
                  {true, true}};
  };
  ops.push_back(binary("add", nn::add));
  ops.push_back(binary("sub", nn::sub));
  ops.push_back(binary("mul", nn::mul));
  ops.push_back({"minimum",
                 [](Rng& rng) {
                   Shape s = rand_matrix(rng);
                   Tensor a = randn(s, rng);
                   Tensor b = a.clone();
                   for (auto& v : b.data()) {
                     const double gap = rng.uniform(0.05, 1.0);
                     v += static_cast<float>(rng.bernoulli(0.5) ? gap : -gap);
                   }
                   return std::vector<Tensor>{a, b};
                 },
                 [](const std::vector<Tensor>& in) { return nn::minimum(in[0], in[1]); },
                 {true, true}});
  ops.push_back({"scale",
                 [](Rng& rng) { return std::vector<Tensor>{randn(rand_matrix(rng), rng)}; },
                 [](const std::vector<Tensor>& in) { return nn::scale(in[0], -1.7f); },
                 {true}});
  ops.push_back({"add_scalar",
                 [](Rng& rng) { return std::vector<Tensor>{randn(rand_matrix(rng), rng)}; },
                 [](const std::vector<Tensor>& in) { return nn::add_scalar(in[0], 0.3f); },
                 {true}});
  ops.push_back(unary_case("relu", nn::relu, away_from_zero));
  ops.push_back(unary_case("exp", nn::exp, normal));
  ops.push_back(unary_case("log", nn::log, [](Shape s, Rng& rng) {
    return uniform(std::move(s), rng, 0.5, 3.0);
  }));
  ops.push_back(unary_case("sigmoid", nn::sigmoid, normal));
  ops.push_back(unary_case("tanh", nn::tanh, normal));
  ops.push_back(unary_case("square", nn::square, normal));
  ops.push_back({"clamp",
                 [](Rng& rng) {
                   Tensor t = Tensor::zeros(rand_matrix(rng));
                   for (auto& v : t.data()) {
                     double x;
                     do {
                       x = rng.uniform(-1.5, 1.5);
                     } while (std::abs(std::abs(x) - 0.5) < 0.02);
                     v = static_cast<float>(x);
                   }
                   return std::vector<Tensor>{t};
                 },
                 [](const std::vector<Tensor>& in) { return nn::clamp(in[0], -0.5f, 0.5f); },
                 {true}});
  ops.push_back(unary_case("sum", nn::sum, normal));
  ops.push_back(unary_case("mean", nn::mean, normal));
  // Centered so the scalar output is O(1): the f32 rounding of the output is
  // the noise floor of the finite difference.
  ops.push_back(unary_case("logsumexp", nn::logsumexp, [](Shape s, Rng& rng) {
    Tensor t = randn(s, rng);
    const float shift = static_cast<float>(std::log(static_cast<double>(t.numel())) + 0.5);
    for (auto& v : t.data()) v -= shift;
    return t;
  }));
  ops.push_back(unary_case("sum_rows", nn::sum_rows, normal));
  ops.push_back({"matmul",
                 [](Rng& rng) {
                   const std::size_t m = dim_between(rng, 1, 4), k = dim_between(rng, 1, 5),
                                     n = dim_between(rng, 1, 4);
                   return std::vector<Tensor>{randn({m, k}, rng), randn({k, n}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::matmul(in[0], in[1]); },
                 {true, true}});
  ops.push_back({"matmul_nt",
                 [](Rng& rng) {
                   const std::size_t m = dim_between(rng, 1, 4), k = dim_between(rng, 1, 5),
                                     n = dim_between(rng, 1, 4);
                   return std::vector<Tensor>{randn({m, k}, rng), randn({n, k}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::matmul_nt(in[0], in[1]); },
                 {true, true}});
  ops.push_back({"dense",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 4), in = dim_between(rng, 1, 5),
                                     out = dim_between(rng, 1, 4);
                   return std::vector<Tensor>{randn({n, in}, rng), randn({out, in}, rng),
                                              randn({out}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::dense(in[0], in[1], in[2]); },
                 {true, true, true}});
  ops.push_back({"add_row",
                 [](Rng& rng) {
                   Shape s = rand_matrix(rng);
                   return std::vector<Tensor>{randn(s, rng), randn({s[1]}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::add_row(in[0], in[1]); },
                 {true, true}});
  for (std::size_t stride : {1, 2}) {
    ops.push_back({"conv2d_s" + std::to_string(stride),
                   [](Rng& rng) {
                     const std::size_t n = dim_between(rng, 1, 2), c = dim_between(rng, 1, 3),
                                       o = dim_between(rng, 1, 3), h = dim_between(rng, 3, 6),
                                       w = dim_between(rng, 3, 6);
                     return std::vector<Tensor>{randn({n, c, h, w}, rng),
                                                randn({o, c, 3, 3}, rng, 0.5),
                                                randn({o}, rng)};
                   },
                   [stride](const std::vector<Tensor>& in) {
                     return nn::conv2d(in[0], in[1], in[2], stride, 1);
                   },
                   {true, true, true}});
  }
  ops.push_back({"group_norm",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 2), groups = dim_between(rng, 1, 2),
                                     c = groups * dim_between(rng, 1, 3);
                   Tensor x = randn({n, c, dim_between(rng, 2, 4), dim_between(rng, 2, 4)}, rng);
                   return std::vector<Tensor>{x, randn({c}, rng), randn({c}, rng),
                                              Tensor::scalar(static_cast<float>(groups))};
                 },
                 [](const std::vector<Tensor>& in) {
                   const auto groups = static_cast<std::size_t>(in[3].item());
                   return nn::group_norm(in[0], groups, in[1], in[2]);
                 },
                 {true, true, true, false}});
  ops.push_back({"group_norm_plain",
                 [](Rng& rng) {
                   return std::vector<Tensor>{
                       randn({dim_between(rng, 1, 2), 4, dim_between(rng, 2, 4), 3}, rng)};
                 },
                 [](const std::vector<Tensor>& in) {
                   return nn::group_norm(in[0], 2, Tensor(), Tensor());
                 },
                 {true}});
  ops.push_back({"max_pool2",
                 [](Rng& rng) {
                   return std::vector<Tensor>{distinct(
                       {dim_between(rng, 1, 2), dim_between(rng, 1, 3), dim_between(rng, 2, 5),
                        dim_between(rng, 2, 5)},
                       rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::max_pool2(in[0]); },
                 {true}});
  ops.push_back({"global_avg_pool",
                 [](Rng& rng) {
                   return std::vector<Tensor>{
                       randn({dim_between(rng, 1, 3), dim_between(rng, 1, 3),
                              dim_between(rng, 1, 4), dim_between(rng, 1, 4)},
                             rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::global_avg_pool(in[0]); },
                 {true}});
  ops.push_back(unary_case("softmax", nn::softmax, normal));
  ops.push_back(unary_case("log_softmax", nn::log_softmax, normal));
  ops.push_back({"l2_normalize",
                 [](Rng& rng) {
                   // Rows are kept away from the origin, where the map is not smooth.
                   Shape s = rand_matrix(rng);
                   const double k = static_cast<double>(s[1]);
                   Tensor t = randn(s, rng, 1.0 / std::sqrt(k));
                   for (std::size_t r = 0; r < s[0]; ++r) {
                     float* row = t.data().data() + r * s[1];
                     double norm = 0.0;
                     for (std::size_t j = 0; j < s[1]; ++j) norm += row[j] * row[j];
                     if (std::sqrt(norm) < 0.2) row[0] += row[0] < 0 ? -0.3f : 0.3f;
                   }
                   return std::vector<Tensor>{t};
                 },
                 [](const std::vector<Tensor>& in) { return nn::l2_normalize(in[0]); },
                 {true}});
  ops.push_back({"concat",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 4);
                   return std::vector<Tensor>{randn({n, dim_between(rng, 1, 3)}, rng),
                                              randn({n, dim_between(rng, 1, 3)}, rng),
                                              randn({n, dim_between(rng, 1, 3)}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::concat(in); },
                 {true, true, true}});
  ops.push_back({"concat_rows",
                 [](Rng& rng) {
                   const std::size_t k = dim_between(rng, 1, 3);
                   return std::vector<Tensor>{randn({dim_between(rng, 1, 3), k, 2}, rng),
                                              randn({dim_between(rng, 1, 3), k, 2}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::concat_rows(in); },
                 {true, true}});
  ops.push_back({"infonce",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 5), d = dim_between(rng, 2, 6);
                   return std::vector<Tensor>{randn({n, d}, rng, 0.5), randn({n, d}, rng, 0.5)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::infonce(in[0], in[1], 0.5f); },
                 {true, true}});
  ops.push_back({"slice_cols",
                 [](Rng& rng) {
                   return std::vector<Tensor>{
                       randn({dim_between(rng, 1, 4), dim_between(rng, 3, 6)}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::slice_cols(in[0], 1, 2); },
                 {true}});
  ops.push_back({"pick",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 5), k = dim_between(rng, 1, 4);
                   Tensor idx = Tensor::zeros({n});
                   for (auto& v : idx.data()) v = static_cast<float>(rng.below(k));
                   return std::vector<Tensor>{randn({n, k}, rng), idx};
                 },
                 [](const std::vector<Tensor>& in) {
                   std::vector<int> idx;
                   for (float v : in[1].data()) idx.push_back(static_cast<int>(v));
                   return nn::pick(in[0], idx);
                 },
                 {true, false}});
  ops.push_back({"diagonal",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 5);
                   return std::vector<Tensor>{randn({n, n}, rng)};
                 },
                 [](const std::vector<Tensor>& in) { return nn::diagonal(in[0]); },
                 {true}});
  ops.push_back({"reshape",
                 [](Rng& rng) {
                   return std::vector<Tensor>{randn({dim_between(rng, 1, 4), 6}, rng)};
                 },
                 [](const std::vector<Tensor>& in) {
                   return nn::reshape(in[0], {in[0].dim(0) * 2, 3});
                 },
                 {true}});
  ops.push_back({"gru_cell",
                 [](Rng& rng) {
                   const std::size_t n = dim_between(rng, 1, 3), in = dim_between(rng, 1, 4),
                                     hid = dim_between(rng, 1, 4);
                   return std::vector<Tensor>{
                       randn({n, in}, rng),          randn({n, hid}, rng, 0.5),
                       randn({3 * hid, in}, rng, 0.5), randn({3 * hid, hid}, rng, 0.5),
                       randn({3 * hid}, rng, 0.5),   randn({3 * hid}, rng, 0.5)};
                 },
                 [](const std::vector<Tensor>& in) {
                   nn::ParamSet p;
                   p.add("g.weight_ih", in[2]);
                   p.add("g.weight_hh", in[3]);
                   p.add("g.bias_ih", in[4]);
                   p.add("g.bias_hh", in[5]);
                   return nn::gru_cell(p, "g", in[0], in[1]);
                 },
                 {true, true, true, true, true, true}});
  return ops;
}

}  // namespace crl::testing
