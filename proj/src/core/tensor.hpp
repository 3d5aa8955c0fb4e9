// Copyright (c) 2026 The tscd Authors. All Rights Reserved.
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

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace tscd {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// One recorded value in the computation graph. The graph doubles as the
/// tape: each node owns its inputs and a backward rule, and releasing the
/// root releases the whole step's tape. Values are fp64 and row-major.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated lazily, same length as values
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

/// Value-semantic handle to a Node. Tensors are immutable after construction
/// except for declared in-place parameter updates via raw_values(). Every
/// operation validates that its result is finite and throws NumericError
/// otherwise.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(node_->values.size()); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->values; }
  double value_at(int64_t i) const {
    return node_->values[static_cast<size_t>(i)];
  }
  /// Scalar payload; the tensor must have exactly one element.
  double item() const;

  /// Mutable storage, for optimizer updates on leaf parameters only.
  std::span<double> raw_values();

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const;
  void zero_grad();

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

  static Tensor wrap(std::shared_ptr<Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse-mode sweep from a scalar root. Gradients accumulate additively
/// into every reachable node that requires grad; leaf parameter gradients
/// persist until zero_grad() clears them. The graph is a DAG by
/// construction, so no cycle check is needed.
void backward(const Tensor& root);

/// Same values, no gradient flow. Used for distillation targets and
/// pseudo-label generation.
Tensor detach(const Tensor& t);

/// All nodes reachable from t through parent links (t included).
std::vector<Node*> reachable_nodes(const Tensor& t);

// -- elementwise (b broadcastable onto a by the trailing-dimension rule) --
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// -- shape --
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);  // 2-D
Tensor slice(const Tensor& a, const std::vector<int>& start,
             const std::vector<int>& extent);

// -- reductions (axes empty = reduce everything to a scalar) --
Tensor reduce_sum(const Tensor& a, std::vector<int> axes = {});
Tensor reduce_mean(const Tensor& a, std::vector<int> axes = {});
Tensor reduce_max(const Tensor& a, std::vector<int> axes = {});

// -- linear algebra (2-D) --
Tensor matmul(const Tensor& a, const Tensor& b);

// -- per-row ops on [P, C] --
Tensor softmax_rows(const Tensor& a);
Tensor logsumexp_rows(const Tensor& a);
/// out[p] = a[p, col_of_row[p]]
Tensor take_row_cols(const Tensor& a, const std::vector<int>& col_of_row);

// -- gathers --
Tensor gather_flat(const Tensor& a, const std::vector<int64_t>& indices);
/// [H,W,C] + n positions -> [n, C]
Tensor gather_positions(const Tensor& hwc, const std::vector<Position>& pos);

/// Cosine similarity over the channel axis: [n,C] x [m,C] -> [n,m].
/// A zero-norm row yields similarity 0 with zero gradient.
Tensor cosine_matrix(const Tensor& a, const Tensor& b);

}  // namespace tscd
