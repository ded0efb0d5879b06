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

#ifndef CRL_NUMERICS_OPS_HPP_
#define CRL_NUMERICS_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "crl/numerics/tensor.hpp"

// Differentiable operations. Every op checks shapes (ShapeError) and records
// a backward closure when any input requires grad and grad mode is enabled.
namespace crl::nn {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Picks a where a <= b (ties go to a), gradient routed accordingly.
Tensor minimum(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, float factor);
Tensor add_scalar(const Tensor& a, float value);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor square(const Tensor& a);
// Gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& a, float lo, float hi);

// Reductions to a scalar (shape {}).
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Numerically stable log(sum(exp(a))) over every element.
Tensor logsumexp(const Tensor& a);
// [N, K] -> [N]
Tensor sum_rows(const Tensor& a);

// [M, K] x [K, N] -> [M, N]
Tensor matmul(const Tensor& a, const Tensor& b);
// [M, K] x [N, K]^T -> [M, N]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// x [N, in], weight [out, in], bias [out] -> [N, out]
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
// x [N, K] + bias [K] broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);

// x [N, C, H, W], weight [O, C, kh, kw], bias [O] -> [N, O, Ho, Wo]
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t padding);
// Per-sample normalization over channel groups of x [N, C, ...]; gamma and
// beta are [C]. Pass empty tensors for the non-affine variant.
Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma,
                  const Tensor& beta, float eps = 1e-5f);
// 2x2 window, stride 2, floor semantics. [N, C, H, W] -> [N, C, H/2, W/2]
Tensor max_pool2(const Tensor& x);
// [N, C, H, W] -> [N, C]
Tensor global_avg_pool(const Tensor& x);

// Row-wise on [N, K].
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);
Tensor l2_normalize(const Tensor& x, float eps = 1e-12f);

// Concatenate 2-D tensors along columns. All inputs share the row count.
Tensor concat(const std::vector<Tensor>& parts);
// Concatenate along the first dimension; trailing dimensions must agree.
Tensor concat_rows(const std::vector<Tensor>& parts);
// Columns [start, start + count) of a 2-D tensor.
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
// out[i] = x[i, index[i]] for x [N, K].
Tensor pick(const Tensor& x, std::span<const int> index);
// Diagonal of a square [N, N] tensor.
Tensor diagonal(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// Contrastive objective on row latents z1, z2 [N, D] with s = z1 z2^T / tau:
//   logsumexp_{j,k}(s_jk) - mean_i(s_ii)
// evaluated in double precision.
Tensor infonce(const Tensor& z1, const Tensor& z2, float temperature);

// Raw GEMM kernel shared by the ops and by inference-only code:
// C[M,N] = alpha * op(A) op(B) + beta * C, row-major, Eigen-backed.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, float alpha, const float* a, const float* b,
          float beta, float* c);

}  // namespace crl::nn

#endif  // CRL_NUMERICS_OPS_HPP_
