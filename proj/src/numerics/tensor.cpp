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

#include "crl/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "crl/common/error.hpp"

namespace crl::nn {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

float* detail::TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
  return grad.data();
}

Tensor::Tensor() : impl_(std::make_shared<detail::TensorImpl>()) {}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (nn::numel(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::filled(Shape shape, float value, bool requires_grad) {
  const std::size_t n = nn::numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value), requires_grad);
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= impl_->shape.size()) {
    throw ShapeError("dimension " + std::to_string(i) + " out of range for " +
                     to_string(impl_->shape));
  }
  return impl_->shape[i];
}

float Tensor::item() const {
  if (impl_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(impl_->shape));
  }
  return impl_->data[0];
}

Tensor Tensor::clone() const {
  return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::from_impl(std::shared_ptr<detail::TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

void Tensor::backward() const {
  if (impl_->data.size() != 1) {
    throw GraphError("backward() requires a scalar loss, got shape " +
                     to_string(impl_->shape));
  }
  if (!impl_->requires_grad) {
    throw GraphError("backward() on a tensor that does not require grad");
  }

  // Iterative post-order DFS yields a topological order (inputs first).
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->node && next < node->node->inputs.size()) {
      detail::TensorImpl* child = node->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  // Interior gradients are per-backward scratch, allocated on first
  // contribution and released once propagated; leaves accumulate.
  for (auto* t : order) {
    if (t->node) std::vector<float>().swap(t->grad);
  }
  impl_->grad_buffer()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* t = *it;
    if (!t->node || t->grad.empty()) continue;
    if (t->node->backward) t->node->backward(*t);
    std::vector<float>().swap(t->grad);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace crl::nn
