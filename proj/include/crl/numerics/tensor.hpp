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

#ifndef CRL_NUMERICS_TENSOR_HPP_
#define CRL_NUMERICS_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace crl::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  // Empty until a gradient is first accumulated.
  std::vector<float> grad;
  bool requires_grad = false;
  // Null for leaves (parameters, inputs, constants).
  std::shared_ptr<Node> node;

  float* grad_buffer();
};

// One recorded operation. `backward` reads the output gradient and
// accumulates into the inputs; it must not hold a reference to the output.
struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(TensorImpl& out)> backward;
};

}  // namespace detail

// Dense f32 tensor with reverse-mode gradient support. Tensor is a handle:
// copies share storage, `clone()` deep-copies the data.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, float value, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t dim(std::size_t i) const;
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<float> data() { return impl_->data; }
  std::span<const float> data() const { return impl_->data; }
  float item() const;

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<float> grad() { return impl_->grad; }
  std::span<const float> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool is_leaf() const { return impl_->node == nullptr; }

  // Fresh leaf with a copy of the data and no gradient history.
  Tensor clone() const;
  // Same storage, cut from the graph (shares the data buffer by copy).
  Tensor detach() const;

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires
  // grad. Throws GraphError unless this tensor holds exactly one element.
  void backward() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  static Tensor from_impl(std::shared_ptr<detail::TensorImpl> impl);

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Graph recording is on by default; NoGradGuard disables it for the current
// thread within its scope (rollouts, evaluation).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace crl::nn

#endif  // CRL_NUMERICS_TENSOR_HPP_
