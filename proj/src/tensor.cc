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

#include "mrcqt/tensor.h"

#include <cassert>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "mrcqt/error.h"

namespace mrcqt {
namespace {

thread_local bool grad_mode_enabled = true;

}  // namespace

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& TensorNode::EnsureGrad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->value.assign(ShapeSize(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data,
                        bool requires_grad) {
  if (ShapeSize(shape) != data.size()) {
    throw SizeError("tensor: shape " + ShapeToString(shape) + " holds " +
                    std::to_string(ShapeSize(shape)) + " values, got " +
                    std::to_string(data.size()));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromData({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) {
    throw SizeError("tensor: item() on shape " + ShapeToString(shape()));
  }
  return node_->value[0];
}

Tensor Tensor::Detach() const {
  return FromData(shape(), node_->value, false);
}

NoGradGuard::NoGradGuard() : previous_(grad_mode_enabled) {
  grad_mode_enabled = false;
}

NoGradGuard::~NoGradGuard() { grad_mode_enabled = previous_; }

bool GradModeEnabled() { return grad_mode_enabled; }

Tensor MakeResult(Shape shape, std::vector<double> value,
                  const std::vector<Tensor>& parents,
                  std::function<void(TensorNode&)> backward) {
#ifndef NDEBUG
  for (double v : value) assert(std::isfinite(v) && "non-finite tensor value");
#endif
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_mode_enabled) {
    bool any = false;
    for (const Tensor& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const Tensor& p : parents) node->parents.push_back(p.node());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

void Backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw SizeError("backward: loss must have one element, got shape " +
                    ShapeToString(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  // `order` owns its nodes: releasing a node's parents below must not free
  // nodes that are still waiting for their turn.
  std::vector<std::shared_ptr<TensorNode>> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<std::shared_ptr<TensorNode>, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      std::shared_ptr<TensorNode> parent = node->parents[next++];
      if (parent->requires_grad && !visited.count(parent.get())) {
        visited.insert(parent.get());
        stack.emplace_back(std::move(parent), 0);
      }
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  loss.node()->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = it->get();
    if (!node->backward) continue;  // leaf
    if (!node->grad.empty()) node->backward(*node);
    node->backward = nullptr;
    node->parents.clear();
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

}  // namespace mrcqt
