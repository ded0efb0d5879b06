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

#include "crl/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "crl/common/error.hpp"

namespace crl::nn {

namespace {

using Impl = detail::TensorImpl;
using BackwardFn = std::function<void(Impl&)>;

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Wraps freshly computed output data. The backward closure is attached only
// when some input requires grad.
Tensor make_result(Shape shape, std::vector<float> data,
                   std::initializer_list<const Tensor*> inputs,
                   BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  if (any_requires_grad(inputs)) {
    auto node = std::make_shared<detail::Node>();
    for (const Tensor* t : inputs) node->inputs.push_back(t->impl());
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
  }
  return out;
}

Tensor make_result(Shape shape, std::vector<float> data,
                   const std::vector<Tensor>& inputs, BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    auto node = std::make_shared<detail::Node>();
    for (const auto& t : inputs) node->inputs.push_back(t.impl());
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
  }
  return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

void check_ndim(const Tensor& a, std::size_t n, const char* op) {
  if (a.ndim() != n) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(n) +
                     "-D input, got " + to_string(a.shape()));
  }
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  std::vector<float> out(a.numel());
  const float* __restrict in = a.data().data();
  float* __restrict dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = f(in[i]);
  Impl* pa = a.impl().get();
  return make_result(a.shape(), std::move(out), {&a}, [pa, dfdx](Impl& o) {
    if (!pa->requires_grad) return;
    float* __restrict g = pa->grad_buffer();
    const float* __restrict x = pa->data.data();
    const float* __restrict y = o.data.data();
    const float* __restrict go = o.grad.data();
    const std::size_t count = o.data.size();
    for (std::size_t i = 0; i < count; ++i) g[i] += go[i] * dfdx(x[i], y[i]);
  });
}

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const MatR>;
using MutMap = Eigen::Map<MatR>;

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, float alpha, const float* a, const float* b,
          float beta, float* c) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  MutMap C(c, M, N);
  if (beta == 0.0f) {
    C.setZero();
  } else if (beta != 1.0f) {
    C *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;
  if (!trans_a && !trans_b) {
    C.noalias() += alpha * (ConstMap(a, M, K) * ConstMap(b, K, N));
  } else if (!trans_a && trans_b) {
    C.noalias() += alpha * (ConstMap(a, M, K) * ConstMap(b, N, K).transpose());
  } else if (trans_a && !trans_b) {
    C.noalias() += alpha * (ConstMap(a, K, M).transpose() * ConstMap(b, K, N));
  } else {
    C.noalias() += alpha * (ConstMap(a, K, M).transpose() *
                            ConstMap(b, N, K).transpose());
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result(a.shape(), std::move(out), {&a, &b}, [pa, pb](Impl& o) {
    for (Impl* p : {pa, pb}) {
      if (!p->requires_grad) continue;
      float* g = p->grad_buffer();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result(a.shape(), std::move(out), {&a, &b}, [pa, pb](Impl& o) {
    if (pa->requires_grad) {
      float* g = pa->grad_buffer();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    }
    if (pb->requires_grad) {
      float* g = pb->grad_buffer();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result(a.shape(), std::move(out), {&a, &b}, [pa, pb](Impl& o) {
    if (pa->requires_grad) {
      float* g = pa->grad_buffer();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * pb->data[i];
    }
    if (pb->requires_grad) {
      float* g = pb->grad_buffer();
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * pa->data[i];
    }
  });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "minimum");
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] <= b.data()[i] ? a.data()[i] : b.data()[i];
  }
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result(a.shape(), std::move(out), {&a, &b}, [pa, pb](Impl& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const bool take_a = pa->data[i] <= pb->data[i];
      Impl* p = take_a ? pa : pb;
      if (p->requires_grad) p->grad_buffer()[i] += o.grad[i];
    }
  });
}

Tensor scale(const Tensor& a, float factor) {
  return unary(
      a, [factor](float x) { return x * factor; },
      [factor](float, float) { return factor; });
}

Tensor add_scalar(const Tensor& a, float value) {
  return unary(
      a, [value](float x) { return x + value; },
      [](float, float) { return 1.0f; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](float x) { return x > 0.0f ? x : 0.0f; },
      [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](float x) { return std::exp(x); }, [](float, float y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](float x) { return std::log(x); },
      [](float x, float) { return 1.0f / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](float x) { return std::tanh(x); },
      [](float, float y) { return 1.0f - y * y; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](float x) { return x * x; },
      [](float x, float) { return 2.0f * x; });
}

Tensor clamp(const Tensor& a, float lo, float hi) {
  return unary(
      a, [lo, hi](float x) { return std::clamp(x, lo, hi); },
      [lo, hi](float x, float) { return (x > lo && x < hi) ? 1.0f : 0.0f; });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.data()) acc += v;
  Impl* pa = a.impl().get();
  return make_result({}, {static_cast<float>(acc)}, {&a}, [pa](Impl& o) {
    if (!pa->requires_grad) return;
    float* g = pa->grad_buffer();
    for (std::size_t i = 0; i < pa->data.size(); ++i) g[i] += o.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0f / static_cast<float>(a.numel()));
}

Tensor logsumexp(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("logsumexp of empty tensor");
  float m = -std::numeric_limits<float>::infinity();
  for (float v : a.data()) m = std::max(m, v);
  double s = 0.0;
  for (float v : a.data()) s += std::exp(static_cast<double>(v - m));
  const float out = m + static_cast<float>(std::log(s));
  Impl* pa = a.impl().get();
  return make_result({}, {out}, {&a}, [pa](Impl& o) {
    if (!pa->requires_grad) return;
    float* g = pa->grad_buffer();
    const float y = o.data[0];
    for (std::size_t i = 0; i < pa->data.size(); ++i) {
      g[i] += o.grad[0] * std::exp(pa->data[i] - y);
    }
  });
}

Tensor sum_rows(const Tensor& a) {
  check_ndim(a, 2, "sum_rows");
  const std::size_t n = a.dim(0), k = a.dim(1);
  std::vector<float> out(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i] += a.data()[i * k + j];
  }
  Impl* pa = a.impl().get();
  return make_result({n}, std::move(out), {&a}, [pa, n, k](Impl& o) {
    if (!pa->requires_grad) return;
    float* g = pa->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) g[i * k + j] += o.grad[i];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_ndim(a, 2, "matmul");
  check_ndim(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions differ " + to_string(a.shape()) +
                     " x " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<float> out(m * n);
  gemm(false, false, m, n, k, 1.0f, a.data().data(), b.data().data(), 0.0f,
       out.data());
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result({m, n}, std::move(out), {&a, &b},
                     [pa, pb, m, n, k](Impl& o) {
                       if (pa->requires_grad) {
                         gemm(false, true, m, k, n, 1.0f, o.grad.data(),
                              pb->data.data(), 1.0f, pa->grad_buffer());
                       }
                       if (pb->requires_grad) {
                         gemm(true, false, k, n, m, 1.0f, pa->data.data(),
                              o.grad.data(), 1.0f, pb->grad_buffer());
                       }
                     });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_ndim(a, 2, "matmul_nt");
  check_ndim(b, 2, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt: inner dimensions differ " +
                     to_string(a.shape()) + " x " + to_string(b.shape()) + "^T");
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<float> out(m * n);
  gemm(false, true, m, n, k, 1.0f, a.data().data(), b.data().data(), 0.0f,
       out.data());
  Impl* pa = a.impl().get();
  Impl* pb = b.impl().get();
  return make_result({m, n}, std::move(out), {&a, &b},
                     [pa, pb, m, n, k](Impl& o) {
                       if (pa->requires_grad) {
                         gemm(false, false, m, k, n, 1.0f, o.grad.data(),
                              pb->data.data(), 1.0f, pa->grad_buffer());
                       }
                       if (pb->requires_grad) {
                         gemm(true, false, n, k, m, 1.0f, o.grad.data(),
                              pa->data.data(), 1.0f, pb->grad_buffer());
                       }
                     });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  check_ndim(x, 2, "add_row");
  if (bias.numel() != x.dim(1)) {
    throw ShapeError("add_row: bias " + to_string(bias.shape()) +
                     " does not match columns of " + to_string(x.shape()));
  }
  const std::size_t n = x.dim(0), k = x.dim(1);
  std::vector<float> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] += bias.data()[j];
  }
  Impl* px = x.impl().get();
  Impl* pb = bias.impl().get();
  return make_result(x.shape(), std::move(out), {&x, &bias},
                     [px, pb, n, k](Impl& o) {
                       if (px->requires_grad) {
                         float* g = px->grad_buffer();
                         for (std::size_t i = 0; i < n * k; ++i) g[i] += o.grad[i];
                       }
                       if (pb->requires_grad) {
                         float* g = pb->grad_buffer();
                         for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < k; ++j) g[j] += o.grad[i * k + j];
                         }
                       }
                     });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  check_ndim(x, 2, "dense");
  check_ndim(weight, 2, "dense");
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("dense: weight " + to_string(weight.shape()) +
                     " incompatible with input " + to_string(x.shape()));
  }
  return add_row(matmul_nt(x, weight), bias);
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
  check_ndim(x, 4, "conv2d");
  check_ndim(weight, 4, "conv2d");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != c) {
    throw ShapeError("conv2d: weight " + to_string(weight.shape()) +
                     " expects " + std::to_string(weight.dim(1)) +
                     " input channels, got " + to_string(x.shape()));
  }
  if (bias.numel() != o) throw ShapeError("conv2d: bias size mismatch");
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (h + 2 * padding < kh || w + 2 * padding < kw) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  const std::size_t ho = (h + 2 * padding - kh) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kw) / stride + 1;
  const std::size_t p = ho * wo;
  const std::size_t ck = c * kh * kw;

  // Images are processed in chunks so the column buffers stay cache-resident;
  // backward recomputes the columns instead of storing them.
  const std::size_t chunk =
      std::clamp<std::size_t>((std::size_t{1} << 16) / std::max<std::size_t>(ck * p, 1),
                              1, n);
  const std::size_t hp = h + 2 * padding, wp = w + 2 * padding;
  // Column layout: row r = (ci, ki, kj), column = local image * p + pixel.
  // Each image is first copied into a zero-bordered buffer so the gather
  // below never needs bounds checks.
  const auto im2col = [=](const float* xd, std::size_t first, std::size_t count,
                          float* col) {
    const std::size_t width = count * p;
    std::vector<float> padded(c * hp * wp, 0.0f);
    for (std::size_t img = 0; img < count; ++img) {
      const float* src_img = xd + (first + img) * c * h * w;
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t y = 0; y < h; ++y) {
          const float* s = src_img + (ci * h + y) * w;
          float* d = padded.data() + (ci * hp + y + padding) * wp + padding;
          for (std::size_t x = 0; x < w; ++x) d[x] = s[x];
        }
      }
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t ki = 0; ki < kh; ++ki) {
          for (std::size_t kj = 0; kj < kw; ++kj) {
            float* dst = col + ((ci * kh + ki) * kw + kj) * width + img * p;
            const float* base = padded.data() + (ci * hp + ki) * wp + kj;
            for (std::size_t oy = 0; oy < ho; ++oy) {
              const float* s = base + oy * stride * wp;
              float* d = dst + oy * wo;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < wo; ++ox) d[ox] = s[ox];
              } else {
                for (std::size_t ox = 0; ox < wo; ++ox) d[ox] = s[ox * stride];
              }
            }
          }
        }
      }
    }
  };

  std::vector<float> out(n * o * p);
  {
    std::vector<float> col(ck * chunk * p);
    std::vector<float> tmp(o * chunk * p);
    for (std::size_t first = 0; first < n; first += chunk) {
      const std::size_t count = std::min(chunk, n - first);
      const std::size_t width = count * p;
      im2col(x.data().data(), first, count, col.data());
      gemm(false, false, o, width, ck, 1.0f, weight.data().data(), col.data(), 0.0f,
           tmp.data());
      for (std::size_t img = 0; img < count; ++img) {
        for (std::size_t oc = 0; oc < o; ++oc) {
          const float b = bias.data()[oc];
          const float* src = tmp.data() + oc * width + img * p;
          float* dst = out.data() + ((first + img) * o + oc) * p;
          for (std::size_t i = 0; i < p; ++i) dst[i] = src[i] + b;
        }
      }
    }
  }

  Impl* px = x.impl().get();
  Impl* pw = weight.impl().get();
  Impl* pb = bias.impl().get();
  return make_result(
      {n, o, ho, wo}, std::move(out), {&x, &weight, &bias},
      [=](Impl& res) {
        if (pb->requires_grad) {
          float* gb = pb->grad_buffer();
          for (std::size_t oc = 0; oc < o; ++oc) {
            double acc = 0.0;
            for (std::size_t img = 0; img < n; ++img) {
              const float* g = res.grad.data() + (img * o + oc) * p;
              float part = 0.0f;
              for (std::size_t i = 0; i < p; ++i) part += g[i];
              acc += part;
            }
            gb[oc] += static_cast<float>(acc);
          }
        }
        if (!pw->requires_grad && !px->requires_grad) return;
        std::vector<float> col(ck * chunk * p);
        std::vector<float> dtmp(o * chunk * p);
        std::vector<float> gpad(px->requires_grad ? c * hp * wp : 0);
        float* gw = pw->requires_grad ? pw->grad_buffer() : nullptr;
        float* gx = px->requires_grad ? px->grad_buffer() : nullptr;
        for (std::size_t first = 0; first < n; first += chunk) {
          const std::size_t count = std::min(chunk, n - first);
          const std::size_t width = count * p;
          for (std::size_t img = 0; img < count; ++img) {
            for (std::size_t oc = 0; oc < o; ++oc) {
              const float* src = res.grad.data() + ((first + img) * o + oc) * p;
              std::copy(src, src + p, dtmp.data() + oc * width + img * p);
            }
          }
          if (gw) {
            im2col(px->data.data(), first, count, col.data());
            gemm(false, true, o, ck, width, 1.0f, dtmp.data(), col.data(), 1.0f, gw);
          }
          if (!gx) continue;
          // col now holds the column gradient.
          gemm(true, false, ck, width, o, 1.0f, pw->data.data(), dtmp.data(), 0.0f,
               col.data());
          for (std::size_t img = 0; img < count; ++img) {
            std::fill(gpad.begin(), gpad.end(), 0.0f);
            for (std::size_t ci = 0; ci < c; ++ci) {
              for (std::size_t ki = 0; ki < kh; ++ki) {
                for (std::size_t kj = 0; kj < kw; ++kj) {
                  const float* src = col.data() + ((ci * kh + ki) * kw + kj) * width + img * p;
                  float* base = gpad.data() + (ci * hp + ki) * wp + kj;
                  for (std::size_t oy = 0; oy < ho; ++oy) {
                    float* d = base + oy * stride * wp;
                    const float* sr = src + oy * wo;
                    for (std::size_t ox = 0; ox < wo; ++ox) d[ox * stride] += sr[ox];
                  }
                }
              }
            }
            float* g_img = gx + (first + img) * c * h * w;
            for (std::size_t ci = 0; ci < c; ++ci) {
              for (std::size_t y = 0; y < h; ++y) {
                const float* sp = gpad.data() + (ci * hp + y + padding) * wp + padding;
                float* d = g_img + (ci * h + y) * w;
                for (std::size_t x = 0; x < w; ++x) d[x] += sp[x];
              }
            }
          }
        }
      });
}

Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma,
                  const Tensor& beta, float eps) {
  if (x.ndim() < 2) throw ShapeError("group_norm: expected [N, C, ...] input");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (groups == 0 || c % groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(c) +
                     " channels not divisible into " + std::to_string(groups) +
                     " groups");
  }
  const bool affine = gamma.numel() > 0;
  if (affine && (gamma.numel() != c || beta.numel() != c)) {
    throw ShapeError("group_norm: affine parameters must have C elements");
  }
  const std::size_t spatial = x.numel() / (n * c);
  const std::size_t cpg = c / groups;
  const std::size_t m = cpg * spatial;

  auto xhat = std::make_shared<std::vector<float>>(x.numel());
  auto rstd = std::make_shared<std::vector<float>>(n * groups);
  std::vector<float> out(x.numel());
  const float* xd = x.data().data();
  const float* gam = affine ? gamma.data().data() : nullptr;
  const float* bet = affine ? beta.data().data() : nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = (i * c + g * cpg) * spatial;
      const float* xs = xd + base;
      // Per-channel float partial sums keep the inner loops vectorizable.
      double mu = 0.0;
      for (std::size_t ch = 0; ch < cpg; ++ch) {
        float acc = 0.0f;
        for (std::size_t s = 0; s < spatial; ++s) acc += xs[ch * spatial + s];
        mu += acc;
      }
      mu /= static_cast<double>(m);
      const float muf = static_cast<float>(mu);
      double var = 0.0;
      for (std::size_t ch = 0; ch < cpg; ++ch) {
        float acc = 0.0f;
        for (std::size_t s = 0; s < spatial; ++s) {
          const float d = xs[ch * spatial + s] - muf;
          acc += d * d;
        }
        var += acc;
      }
      var /= static_cast<double>(m);
      const float r = static_cast<float>(1.0 / std::sqrt(var + eps));
      (*rstd)[i * groups + g] = r;
      for (std::size_t ch = 0; ch < cpg; ++ch) {
        const std::size_t gc = g * cpg + ch;
        const float sc = affine ? gam[gc] * r : r;
        const float sh = affine ? bet[gc] : 0.0f;
        const float* xc = xs + ch * spatial;
        float* hc = xhat->data() + base + ch * spatial;
        float* oc = out.data() + base + ch * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const float xh = (xc[s] - muf) * r;
          hc[s] = xh;
          oc[s] = affine ? (xc[s] - muf) * sc + sh : xh;
        }
      }
    }
  }

  Impl* px = x.impl().get();
  Impl* pg = gamma.impl().get();
  Impl* pb = beta.impl().get();
  return make_result(
      x.shape(), std::move(out), {&x, &gamma, &beta}, [=](Impl& o) {
        if (affine && pg->requires_grad) {
          float* gg = pg->grad_buffer();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t base = (i * c + ch) * spatial;
              double acc = 0.0;
              for (std::size_t s = 0; s < spatial; ++s) {
                acc += o.grad[base + s] * (*xhat)[base + s];
              }
              gg[ch] += static_cast<float>(acc);
            }
          }
        }
        if (affine && pb->requires_grad) {
          float* gb = pb->grad_buffer();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t base = (i * c + ch) * spatial;
              double acc = 0.0;
              for (std::size_t s = 0; s < spatial; ++s) acc += o.grad[base + s];
              gb[ch] += static_cast<float>(acc);
            }
          }
        }
        if (!px->requires_grad) return;
        float* gx = px->grad_buffer();
        const float inv_m = 1.0f / static_cast<float>(m);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t base = (i * c + g * cpg) * spatial;
            const float* go = o.grad.data() + base;
            const float* xh = xhat->data() + base;
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t ch = 0; ch < cpg; ++ch) {
              const float gm = affine ? pg->data[g * cpg + ch] : 1.0f;
              float a = 0.0f, b = 0.0f;
              for (std::size_t s = 0; s < spatial; ++s) {
                a += go[ch * spatial + s];
                b += go[ch * spatial + s] * xh[ch * spatial + s];
              }
              sum_d += gm * a;
              sum_dx += gm * b;
            }
            const float r = (*rstd)[i * groups + g];
            const float md = static_cast<float>(sum_d) * inv_m;
            const float mdx = static_cast<float>(sum_dx) * inv_m;
            for (std::size_t ch = 0; ch < cpg; ++ch) {
              const float gm = affine ? pg->data[g * cpg + ch] : 1.0f;
              float* gxc = gx + base + ch * spatial;
              for (std::size_t s = 0; s < spatial; ++s) {
                const std::size_t j = ch * spatial + s;
                gxc[s] += r * (gm * go[j] - md - xh[j] * mdx);
              }
            }
          }
        }
      });
}

Tensor max_pool2(const Tensor& x) {
  check_ndim(x, 4, "max_pool2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h / 2, wo = w / 2;
  if (ho == 0 || wo == 0) throw ShapeError("max_pool2: input smaller than 2x2");
  std::vector<float> out(n * c * ho * wo);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const float* xd = x.data().data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const float* src = xd + plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * oy + dy) * w + 2 * ox + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = plane * ho * wo + oy * wo + ox;
        out[o] = src[best];
        (*argmax)[o] = plane * h * w + best;
      }
    }
  }
  Impl* px = x.impl().get();
  return make_result({n, c, ho, wo}, std::move(out), {&x}, [px, argmax](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[(*argmax)[i]] += o.grad[i];
  });
}

Tensor global_avg_pool(const Tensor& x) {
  check_ndim(x, 4, "global_avg_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), s = x.dim(2) * x.dim(3);
  std::vector<float> out(n * c);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) acc += x.data()[plane * s + i];
    out[plane] = static_cast<float>(acc / static_cast<double>(s));
  }
  Impl* px = x.impl().get();
  return make_result({n, c}, std::move(out), {&x}, [px, s](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    const float inv = 1.0f / static_cast<float>(s);
    for (std::size_t plane = 0; plane < o.grad.size(); ++plane) {
      for (std::size_t i = 0; i < s; ++i) g[plane * s + i] += o.grad[plane] * inv;
    }
  });
}

Tensor softmax(const Tensor& x) {
  check_ndim(x, 2, "softmax");
  const std::size_t n = x.dim(0), k = x.dim(1);
  std::vector<float> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = x.data().data() + i * k;
    const float m = *std::max_element(row, row + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = std::exp(row[j] - m);
      s += out[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= static_cast<float>(s);
  }
  Impl* px = x.impl().get();
  return make_result(x.shape(), std::move(out), {&x}, [px, n, k](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += o.grad[i * k + j] * o.data[i * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        g[i * k + j] += o.data[i * k + j] * (o.grad[i * k + j] - static_cast<float>(dot));
      }
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  check_ndim(x, 2, "log_softmax");
  const std::size_t n = x.dim(0), k = x.dim(1);
  std::vector<float> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = x.data().data() + i * k;
    const float m = *std::max_element(row, row + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(row[j] - m));
    const float lse = m + static_cast<float>(std::log(s));
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = row[j] - lse;
  }
  Impl* px = x.impl().get();
  return make_result(x.shape(), std::move(out), {&x}, [px, n, k](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += o.grad[i * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        g[i * k + j] += o.grad[i * k + j] -
                        std::exp(o.data[i * k + j]) * static_cast<float>(total);
      }
    }
  });
}

Tensor l2_normalize(const Tensor& x, float eps) {
  check_ndim(x, 2, "l2_normalize");
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<float> out(n * d);
  auto norms = std::make_shared<std::vector<float>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = x.data()[i * d + j];
      s += v * v;
    }
    const float norm = std::max(static_cast<float>(std::sqrt(s)), eps);
    (*norms)[i] = norm;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.data()[i * d + j] / norm;
  }
  Impl* px = x.impl().get();
  return make_result(x.shape(), std::move(out), {&x}, [px, n, d, norms, eps](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      const float norm = (*norms)[i];
      if (norm <= eps) {
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += o.grad[i * d + j] / norm;
        continue;
      }
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += o.grad[i * d + j] * o.data[i * d + j];
      for (std::size_t j = 0; j < d; ++j) {
        g[i * d + j] +=
            (o.grad[i * d + j] - o.data[i * d + j] * static_cast<float>(dot)) / norm;
      }
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Shape shape = parts[0].shape();
  if (shape.empty()) throw ShapeError("concat_rows: inputs need at least one dimension");
  const std::size_t row = parts[0].numel() / std::max<std::size_t>(shape[0], 1);
  std::size_t rows = 0;
  for (const auto& t : parts) {
    if (t.ndim() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), t.shape().begin() + 1)) {
      throw ShapeError("concat_rows: trailing shapes differ, " + to_string(shape) + " vs " +
                       to_string(t.shape()));
    }
    rows += t.dim(0);
  }
  std::vector<float> out;
  out.reserve(rows * row);
  std::vector<Impl*> impls;
  std::vector<std::size_t> offsets;
  for (const auto& t : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), t.data().begin(), t.data().end());
    impls.push_back(t.impl().get());
  }
  shape[0] = rows;
  return make_result(std::move(shape), std::move(out), parts, [impls, offsets](Impl& o) {
    for (std::size_t p = 0; p < impls.size(); ++p) {
      if (!impls[p]->requires_grad) continue;
      float* g = impls[p]->grad_buffer();
      const float* src = o.grad.data() + offsets[p];
      for (std::size_t i = 0; i < impls[p]->data.size(); ++i) g[i] += src[i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t n = parts[0].ndim() == 2 ? parts[0].dim(0) : 0;
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& t : parts) {
    if (t.ndim() != 2 || t.dim(0) != n) {
      throw ShapeError("concat: all inputs must be 2-D with " +
                       std::to_string(n) + " rows, got " + to_string(t.shape()));
    }
    widths.push_back(t.dim(1));
    total += t.dim(1);
  }
  std::vector<float> out(n * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* src = parts[p].data().data() + i * widths[p];
      std::copy(src, src + widths[p], out.data() + i * total + offset);
    }
    offset += widths[p];
  }
  std::vector<Impl*> impls;
  for (const auto& t : parts) impls.push_back(t.impl().get());
  return make_result({n, total}, std::move(out), parts,
                     [impls, widths, n, total](Impl& o) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < impls.size(); ++p) {
                         if (impls[p]->requires_grad) {
                           float* g = impls[p]->grad_buffer();
                           for (std::size_t i = 0; i < n; ++i) {
                             for (std::size_t j = 0; j < widths[p]; ++j) {
                               g[i * widths[p] + j] += o.grad[i * total + offset + j];
                             }
                           }
                         }
                         offset += widths[p];
                       }
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  check_ndim(x, 2, "slice_cols");
  const std::size_t n = x.dim(0), k = x.dim(1);
  if (start + count > k) throw ShapeError("slice_cols: range out of bounds");
  std::vector<float> out(n * count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = x.data()[i * k + start + j];
  }
  Impl* px = x.impl().get();
  return make_result({n, count}, std::move(out), {&x},
                     [px, n, k, start, count](Impl& o) {
                       if (!px->requires_grad) return;
                       float* g = px->grad_buffer();
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < count; ++j) {
                           g[i * k + start + j] += o.grad[i * count + j];
                         }
                       }
                     });
}

Tensor pick(const Tensor& x, std::span<const int> index) {
  check_ndim(x, 2, "pick");
  const std::size_t n = x.dim(0), k = x.dim(1);
  if (index.size() != n) throw ShapeError("pick: one index per row required");
  std::vector<int> idx(index.begin(), index.end());
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= k) {
      throw ShapeError("pick: index out of range");
    }
    out[i] = x.data()[i * k + idx[i]];
  }
  Impl* px = x.impl().get();
  return make_result({n}, std::move(out), {&x}, [px, idx, k](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g[i * k + idx[i]] += o.grad[i];
  });
}

Tensor diagonal(const Tensor& x) {
  check_ndim(x, 2, "diagonal");
  const std::size_t n = x.dim(0);
  if (x.dim(1) != n) throw ShapeError("diagonal: input must be square");
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.data()[i * n + i];
  Impl* px = x.impl().get();
  return make_result({n}, std::move(out), {&x}, [px, n](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) g[i * n + i] += o.grad[i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (nn::numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " +
                     to_string(shape));
  }
  std::vector<float> out(x.data().begin(), x.data().end());
  Impl* px = x.impl().get();
  return make_result(std::move(shape), std::move(out), {&x}, [px](Impl& o) {
    if (!px->requires_grad) return;
    float* g = px->grad_buffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor infonce(const Tensor& z1, const Tensor& z2, float temperature) {
  check_ndim(z1, 2, "infonce");
  if (z1.shape() != z2.shape() || z1.dim(0) == 0) {
    throw ShapeError("infonce: expected two non-empty [N, D] tensors, got " +
                     to_string(z1.shape()) + " and " + to_string(z2.shape()));
  }
  const std::size_t n = z1.dim(0), d = z1.dim(1);
  const double inv_tau = 1.0 / static_cast<double>(temperature);
  // prob[j * n + k] = exp(s_jk - logsumexp(s)), kept for backward.
  auto prob = std::make_shared<std::vector<double>>(n * n);
  const float* a = z1.data().data();
  const float* b = z2.data().data();
  double top = -std::numeric_limits<double>::infinity();
  double diag = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      double dot = 0.0;
      for (std::size_t l = 0; l < d; ++l) dot += static_cast<double>(a[j * d + l]) * b[k * d + l];
      const double s = dot * inv_tau;
      (*prob)[j * n + k] = s;
      top = std::max(top, s);
      if (j == k) diag += s;
    }
  }
  double total = 0.0;
  for (double& v : *prob) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : *prob) v /= total;
  const double loss = top + std::log(total) - diag / static_cast<double>(n);

  Impl* pa = z1.impl().get();
  Impl* pb = z2.impl().get();
  return make_result({}, {static_cast<float>(loss)}, {&z1, &z2},
                     [pa, pb, prob, n, d, inv_tau](Impl& o) {
    const double g = o.grad[0];
    std::vector<double> coef(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        coef[j * n + k] = g * inv_tau * ((*prob)[j * n + k] - (j == k ? 1.0 / static_cast<double>(n) : 0.0));
      }
    }
    if (pa->requires_grad) {
      float* ga = pa->grad_buffer();
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < d; ++l) {
          double acc = 0.0;
          for (std::size_t k = 0; k < n; ++k) acc += coef[j * n + k] * pb->data[k * d + l];
          ga[j * d + l] += static_cast<float>(acc);
        }
      }
    }
    if (pb->requires_grad) {
      float* gb = pb->grad_buffer();
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < d; ++l) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += coef[j * n + k] * pa->data[j * d + l];
          gb[k * d + l] += static_cast<float>(acc);
        }
      }
    }
  });
}

}  // namespace crl::nn
