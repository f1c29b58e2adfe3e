// Copyright 2026 The skilltok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace skilltok {

using Shape = std::vector<std::size_t>;
// Aligned so vectorized reductions see the same layout on every run.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

std::size_t numel_of(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct TensorNode;

/**
 * Dense row-major tensor of doubles that can take part in a reverse-mode
 * differentiation graph.
 *
 * A Tensor is a cheap handle (shared ownership of its node). Data is treated
 * as immutable once an op has consumed it; the only mutation points are
 * parameter updates (optimizer, checkpoint load) and gradient accumulation.
 */
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(node_); }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access. Only for leaves (parameters, inputs being built).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Runs reverse-mode differentiation from this scalar. Leaf gradients are
  // accumulated (added), intermediate gradients are recomputed each call.
  void backward() const;

  // Same data, no history.
  Tensor detach() const;
  // Deep copy of the data into a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<TensorNode>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  friend Tensor make_op_result(Shape, Buffer,
                               std::initializer_list<Tensor>,
                               std::function<void(TensorNode&)>);
  friend Tensor make_op_result(Shape, Buffer,
                               const std::vector<Tensor>&,
                               std::function<void(TensorNode&)>);

  std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
  Shape shape;
  Buffer data;
  Buffer grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Tensor> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad();
};

// Builds the result of an op. History is recorded only when grad mode is on
// and at least one parent requires grad.
Tensor make_op_result(Shape shape, Buffer data,
                      std::initializer_list<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn);
Tensor make_op_result(Shape shape, Buffer data,
                      const std::vector<Tensor>& parents,
                      std::function<void(TensorNode&)> backward_fn);

// Adds `values` into the gradient of `t` if it tracks gradients.
void accumulate_grad(const Tensor& t, std::span<const double> values);

bool grad_enabled();

// Disables history recording for its lifetime (evaluation, target encoding).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace skilltok
