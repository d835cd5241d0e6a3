// Copyright 2026 The mrcqt Authors
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

#ifndef MRCQT_TENSOR_H_
#define MRCQT_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrcqt/spectral.h"

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// Every op that sees an input requiring gradients (while grad mode is on)
// records its parents and a backward rule on the output node. Backward()
// walks the recorded graph once in reverse topological order, accumulates
// into leaf gradients and then releases the graph.
namespace mrcqt {

std::size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(TensorNode&)> backward;

  std::vector<double>& EnsureGrad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  // Throws SizeError when data.size() != ShapeSize(shape).
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  const double* ptr() const { return node_->value.data(); }
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->EnsureGrad(); }
  void ZeroGrad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  // Value of a single-element tensor.
  double item() const;
  // Copy of the values with no graph attached.
  Tensor Detach() const;

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradModeEnabled();

// Creates an op output. When grad mode is on and any parent requires
// gradients the backward rule and parents are recorded; otherwise the
// result is a plain constant. Asserts finiteness in debug builds.
Tensor MakeResult(Shape shape, std::vector<double> value,
                  const std::vector<Tensor>& parents,
                  std::function<void(TensorNode&)> backward);

// Reverse pass from a single-element tensor. Accumulates into the grad of
// every leaf that requires gradients, then frees the intermediate graph.
// Throws SizeError for non-scalar losses.
void Backward(const Tensor& loss);

}  // namespace mrcqt

#endif  // MRCQT_TENSOR_H_
