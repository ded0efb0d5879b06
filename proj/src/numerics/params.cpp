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

#include "crl/numerics/params.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "crl/common/error.hpp"
#include "crl/numerics/ops.hpp"

namespace crl::nn {

void ParamSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  tensor.set_requires_grad(!frozen_);
  entries_.emplace_back(std::move(name), std::move(tensor));
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

Tensor& ParamSet::at(const std::string& name) {
  for (auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ConfigError("unknown parameter: " + name);
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ConfigError("unknown parameter: " + name);
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParamSet::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& e : entries_) {
    e.second.set_requires_grad(!frozen);
    if (frozen) e.second.zero_grad();
  }
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  out.frozen_ = frozen_;
  for (const auto& e : entries_) {
    Tensor t = e.second.clone();
    t.set_requires_grad(!frozen_);
    out.entries_.emplace_back(e.first, std::move(t));
  }
  return out;
}

void ParamSet::copy_values_from(const ParamSet& other) {
  if (other.size() != size()) throw ShapeError("copy_values_from: size mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& dst = entries_[i];
    const auto& src = other.entries_[i];
    if (dst.first != src.first || dst.second.shape() != src.second.shape()) {
      throw ShapeError("copy_values_from: layout mismatch at " + dst.first);
    }
    std::copy(src.second.data().begin(), src.second.data().end(),
              dst.second.data().begin());
  }
}

bool ParamSet::values_equal(const ParamSet& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.first != b.first || a.second.shape() != b.second.shape()) return false;
    if (std::memcmp(a.second.data().data(), b.second.data().data(),
                    a.second.numel() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

void adam_step(ParamSet& params, AdamState& state) {
  if (params.frozen()) throw FrozenError("adam_step on a frozen parameter set");
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const float bc1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
  const float bc2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
  for (auto& [name, tensor] : params) {
    if (!tensor.has_grad()) continue;
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) {
      m.assign(tensor.numel(), 0.0f);
      v.assign(tensor.numel(), 0.0f);
    }
    auto data = tensor.data();
    auto grad = tensor.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g * g;
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    tensor.zero_grad();
  }
}

float clip_grad_norm(const std::vector<ParamSet*>& sets, float max_norm) {
  double sq = 0.0;
  for (ParamSet* set : sets) {
    for (auto& [name, t] : *set) {
      if (!t.has_grad()) continue;
      for (float g : t.grad()) sq += static_cast<double>(g) * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float factor = static_cast<float>(max_norm / (norm + 1e-6));
    for (ParamSet* set : sets) {
      for (auto& [name, t] : *set) {
        if (!t.has_grad()) continue;
        for (float& g : t.grad()) g *= factor;
      }
    }
  }
  return static_cast<float>(norm);
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<float> data(numel(shape));
  for (float& v : data) v = static_cast<float>(rng.uniform(-bound, bound));
  return Tensor(std::move(shape), std::move(data));
}

Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng, float gain) {
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign correction makes the distribution uniform (Haar).
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  std::vector<float> data(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = rows >= cols ? q(i, j) : q(j, i);
      data[i * cols + j] = static_cast<float>(gain * v);
    }
  }
  return Tensor({rows, cols}, std::move(data));
}

void add_dense(ParamSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& rng, float weight_scale) {
  Tensor w = kaiming_uniform({out, in}, in, rng);
  if (weight_scale != 1.0f) {
    for (float& v : w.data()) v *= weight_scale;
  }
  params.add(prefix + ".weight", std::move(w));
  params.add(prefix + ".bias", Tensor::zeros({out}));
}

Tensor apply_dense(const ParamSet& params, const std::string& prefix,
                   const Tensor& x) {
  return dense(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"));
}

}  // namespace crl::nn
