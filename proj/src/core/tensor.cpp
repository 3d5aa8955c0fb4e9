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

#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tscd {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_shape_valid(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
  for (int d : shape) {
    if (d < 1) throw ShapeError("tensor dims must be positive, got " + shape_str(shape));
  }
}

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by '") + op + "'");
    }
  }
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> values,
                                bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->requires_grad = requires_grad;
  return n;
}

// Attaches parents + backward only when the result participates in a tape.
Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward) {
  check_finite(values, op);
  bool grad = false;
  for (const auto& p : parents) grad = grad || p->requires_grad;
  auto node = make_node(std::move(shape), std::move(values), grad);
  if (grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor::wrap(std::move(node));
}

// Broadcast contract: equal sizes, or b's shape is a trailing suffix of a's
// (size-1 tensors always broadcast). Returns the modulus for b's flat index.
int64_t broadcast_modulus(const Shape& a, const Shape& b, const char* op) {
  const int64_t an = numel(a), bn = numel(b);
  if (an == bn && a == b) return bn;
  if (bn == 1) return 1;
  if (b.size() <= a.size()) {
    const size_t off = a.size() - b.size();
    bool suffix = true;
    for (size_t i = 0; i < b.size(); ++i) suffix = suffix && (a[off + i] == b[i]);
    if (suffix) return bn;
  }
  throw ShapeError(std::string(op) + ": shape " + shape_str(b) +
                   " does not broadcast onto " + shape_str(a));
}

}  // namespace

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape_valid(shape);
  if (numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  check_finite(values, "from");
  return wrap(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape_valid(shape);
  std::vector<double> v(static_cast<size_t>(numel(shape)), 0.0);
  return wrap(make_node(std::move(shape), std::move(v), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape_valid(shape);
  check_finite({value}, "full");
  std::vector<double> v(static_cast<size_t>(numel(shape)), value);
  return wrap(make_node(std::move(shape), std::move(v), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() requires a scalar tensor");
  return node_->values[0];
}

std::span<double> Tensor::raw_values() { return node_->values; }

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) throw Error("tensor has no gradient buffer");
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

std::vector<Node*> reachable_nodes(const Tensor& t) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{t.node()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  return order;
}

void backward(const Tensor& root) {
  if (!root.defined() || root.size() != 1) {
    throw ShapeError("backward: root must be a scalar tensor");
  }
  if (!root.requires_grad()) return;

  // Reverse topological order via iterative post-order DFS.
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> stack{{root.node(), 0}};
  visited.insert(root.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] += 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

Tensor detach(const Tensor& t) {
  return Tensor::wrap(make_node(t.shape(), {t.values().begin(), t.values().end()}, false));
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

template <class Fwd, class Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, Bwd bwd) {
  const int64_t bs = broadcast_modulus(a.shape(), b.shape(), op);
  const int64_t n = a.size();
  std::vector<double> out(static_cast<size_t>(n));
  const auto av = a.values();
  const auto bv = b.values();
  for (int64_t i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = fwd(av[static_cast<size_t>(i)],
                                      bv[static_cast<size_t>(i % bs)]);
  }
  return make_result(
      a.shape(), std::move(out), op, {a.node_ptr(), b.node_ptr()},
      [bs, bwd](Node& node) {
        Node& na = *node.parents[0];
        Node& nb = *node.parents[1];
        const int64_t n = static_cast<int64_t>(node.values.size());
        if (na.requires_grad) na.ensure_grad();
        if (nb.requires_grad) nb.ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          const double g = node.grad[static_cast<size_t>(i)];
          if (g == 0.0) continue;
          const double x = na.values[static_cast<size_t>(i)];
          const double y = nb.values[static_cast<size_t>(i % bs)];
          double gx, gy;
          bwd(x, y, g, gx, gy);
          if (na.requires_grad) na.grad[static_cast<size_t>(i)] += gx;
          if (nb.requires_grad) nb.grad[static_cast<size_t>(i % bs)] += gy;
        }
      });
}

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, const char* op, Fwd fwd, Bwd bwd) {
  const int64_t n = a.size();
  std::vector<double> out(static_cast<size_t>(n));
  const auto av = a.values();
  for (int64_t i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = fwd(av[static_cast<size_t>(i)]);
  }
  return make_result(a.shape(), std::move(out), op, {a.node_ptr()},
                     [bwd](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       const int64_t n = static_cast<int64_t>(node.values.size());
                       for (int64_t i = 0; i < n; ++i) {
                         const double g = node.grad[static_cast<size_t>(i)];
                         if (g == 0.0) continue;
                         na.grad[static_cast<size_t>(i)] +=
                             g * bwd(na.values[static_cast<size_t>(i)],
                                     node.values[static_cast<size_t>(i)]);
                       }
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](double x, double y) { return x + y; },
                   [](double, double, double g, double& gx, double& gy) {
                     gx = g;
                     gy = g;
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](double x, double y) { return x - y; },
                   [](double, double, double g, double& gx, double& gy) {
                     gx = g;
                     gy = -g;
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](double x, double y) { return x * y; },
                   [](double x, double y, double g, double& gx, double& gy) {
                     gx = g * y;
                     gy = g * x;
                   });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "div", [](double x, double y) { return x / y; },
                   [](double x, double y, double g, double& gx, double& gy) {
                     gx = g / y;
                     gy = -g * x / (y * y);
                   });
}

Tensor neg(const Tensor& a) {
  return unary_op(a, "neg", [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& a) {
  // Subgradient at 0 is taken as 0.
  return unary_op(a, "abs", [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, "sigmoid",
                  [](double x) {
                    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                    : std::exp(x) / (1.0 + std::exp(x));
                  },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  // log(1 + e^x), computed without overflow for large |x|.
  return unary_op(a, "softplus",
                  [](double x) {
                    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
                  },
                  [](double x, double) {
                    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                    : std::exp(x) / (1.0 + std::exp(x));
                  });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary_op(a, "add_scalar", [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return unary_op(a, "mul_scalar", [c](double x) { return x * c; },
                  [c](double, double) { return c; });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  check_shape_valid(shape);
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), "reshape", {a.node_ptr()},
                     [](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < node.grad.size(); ++i) {
                         na.grad[i] += node.grad[i];
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a 2-D tensor");
  const int r = a.dim(0), c = a.dim(1);
  std::vector<double> out(static_cast<size_t>(a.size()));
  const auto av = a.values();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      out[static_cast<size_t>(j) * r + i] = av[static_cast<size_t>(i) * c + j];
    }
  }
  return make_result({c, r}, std::move(out), "transpose", {a.node_ptr()},
                     [r, c](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (int i = 0; i < r; ++i) {
                         for (int j = 0; j < c; ++j) {
                           na.grad[static_cast<size_t>(i) * c + j] +=
                               node.grad[static_cast<size_t>(j) * r + i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, const std::vector<int>& start,
             const std::vector<int>& extent) {
  const auto& shape = a.shape();
  if (start.size() != shape.size() || extent.size() != shape.size()) {
    throw ShapeError("slice: start/extent rank mismatch");
  }
  const int rank = a.rank();
  for (int d = 0; d < rank; ++d) {
    if (start[d] < 0 || extent[d] < 1 || start[d] + extent[d] > shape[d]) {
      throw ShapeError("slice: window out of bounds for dim " + std::to_string(d));
    }
  }
  std::vector<int64_t> stride(rank, 1);
  for (int d = rank - 2; d >= 0; --d) stride[d] = stride[d + 1] * shape[d + 1];

  const int64_t n = numel(extent);
  std::vector<double> out(static_cast<size_t>(n));
  const auto av = a.values();
  std::vector<int> idx(rank, 0);
  for (int64_t i = 0; i < n; ++i) {
    int64_t src = 0;
    for (int d = 0; d < rank; ++d) src += stride[d] * (start[d] + idx[d]);
    out[static_cast<size_t>(i)] = av[static_cast<size_t>(src)];
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[d] < extent[d]) break;
      idx[d] = 0;
    }
  }
  return make_result(extent, std::move(out), "slice", {a.node_ptr()},
                     [start, extent, stride](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       const int rank = static_cast<int>(extent.size());
                       std::vector<int> idx(rank, 0);
                       const int64_t n = static_cast<int64_t>(node.grad.size());
                       for (int64_t i = 0; i < n; ++i) {
                         int64_t src = 0;
                         for (int d = 0; d < rank; ++d) {
                           src += stride[d] * (start[d] + idx[d]);
                         }
                         na.grad[static_cast<size_t>(src)] += node.grad[static_cast<size_t>(i)];
                         for (int d = rank - 1; d >= 0; --d) {
                           if (++idx[d] < extent[d]) break;
                           idx[d] = 0;
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

namespace {

struct ReducePlan {
  Shape out_shape;
  std::vector<int64_t> out_index_of;  // input flat index -> output flat index
  int64_t group_size = 1;
};

ReducePlan plan_reduce(const Shape& shape, std::vector<int> axes) {
  const int rank = static_cast<int>(shape.size());
  if (axes.empty()) {
    for (int d = 0; d < rank; ++d) axes.push_back(d);
  }
  std::sort(axes.begin(), axes.end());
  for (size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] < 0 || axes[i] >= rank) throw ShapeError("reduce: axis out of range");
    if (i > 0 && axes[i] == axes[i - 1]) throw ShapeError("reduce: duplicate axis");
  }
  std::vector<bool> reduced(rank, false);
  for (int ax : axes) reduced[static_cast<size_t>(ax)] = true;

  ReducePlan plan;
  for (int d = 0; d < rank; ++d) {
    if (!reduced[d]) plan.out_shape.push_back(shape[d]);
    else plan.group_size *= shape[d];
  }
  if (plan.out_shape.empty()) plan.out_shape = {1};

  const int64_t n = numel(shape);
  plan.out_index_of.resize(static_cast<size_t>(n));
  std::vector<int> idx(rank, 0);
  std::vector<int64_t> out_stride;
  {
    std::vector<int> kept;
    for (int d = 0; d < rank; ++d) {
      if (!reduced[d]) kept.push_back(shape[d]);
    }
    out_stride.assign(kept.size(), 1);
    for (int d = static_cast<int>(kept.size()) - 2; d >= 0; --d) {
      out_stride[d] = out_stride[d + 1] * kept[d + 1];
    }
  }
  for (int64_t i = 0; i < n; ++i) {
    int64_t o = 0;
    int k = 0;
    for (int d = 0; d < rank; ++d) {
      if (!reduced[d]) o += out_stride[k++] * idx[d];
    }
    plan.out_index_of[static_cast<size_t>(i)] = o;
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  return plan;
}

}  // namespace

Tensor reduce_sum(const Tensor& a, std::vector<int> axes) {
  ReducePlan plan = plan_reduce(a.shape(), std::move(axes));
  std::vector<double> out(static_cast<size_t>(numel(plan.out_shape)), 0.0);
  const auto av = a.values();
  for (int64_t i = 0; i < a.size(); ++i) {
    out[static_cast<size_t>(plan.out_index_of[static_cast<size_t>(i)])] +=
        av[static_cast<size_t>(i)];
  }
  auto map = std::make_shared<std::vector<int64_t>>(std::move(plan.out_index_of));
  return make_result(plan.out_shape, std::move(out), "sum", {a.node_ptr()},
                     [map](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < na.grad.size(); ++i) {
                         na.grad[i] += node.grad[static_cast<size_t>((*map)[i])];
                       }
                     });
}

Tensor reduce_mean(const Tensor& a, std::vector<int> axes) {
  ReducePlan plan = plan_reduce(a.shape(), std::move(axes));
  const double inv = 1.0 / static_cast<double>(plan.group_size);
  std::vector<double> out(static_cast<size_t>(numel(plan.out_shape)), 0.0);
  const auto av = a.values();
  for (int64_t i = 0; i < a.size(); ++i) {
    out[static_cast<size_t>(plan.out_index_of[static_cast<size_t>(i)])] +=
        av[static_cast<size_t>(i)] * inv;
  }
  auto map = std::make_shared<std::vector<int64_t>>(std::move(plan.out_index_of));
  return make_result(plan.out_shape, std::move(out), "mean", {a.node_ptr()},
                     [map, inv](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < na.grad.size(); ++i) {
                         na.grad[i] += inv * node.grad[static_cast<size_t>((*map)[i])];
                       }
                     });
}

Tensor reduce_max(const Tensor& a, std::vector<int> axes) {
  ReducePlan plan = plan_reduce(a.shape(), std::move(axes));
  const size_t out_n = static_cast<size_t>(numel(plan.out_shape));
  std::vector<double> out(out_n, -std::numeric_limits<double>::infinity());
  std::vector<int64_t> argmax(out_n, -1);
  const auto av = a.values();
  for (int64_t i = 0; i < a.size(); ++i) {
    const size_t o = static_cast<size_t>(plan.out_index_of[static_cast<size_t>(i)]);
    if (av[static_cast<size_t>(i)] > out[o]) {
      out[o] = av[static_cast<size_t>(i)];
      argmax[o] = i;
    }
  }
  auto arg = std::make_shared<std::vector<int64_t>>(std::move(argmax));
  return make_result(plan.out_shape, std::move(out), "max", {a.node_ptr()},
                     [arg](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t o = 0; o < node.grad.size(); ++o) {
                         na.grad[static_cast<size_t>((*arg)[o])] += node.grad[o];
                       }
                     });
}

// ---------------------------------------------------------------------------
// matmul and row ops
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const int p = a.dim(0), k = a.dim(1), q = b.dim(1);
  std::vector<double> out(static_cast<size_t>(p) * q, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (int i = 0; i < p; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double x = av[static_cast<size_t>(i) * k + kk];
      if (x == 0.0) continue;
      const size_t brow = static_cast<size_t>(kk) * q;
      const size_t orow = static_cast<size_t>(i) * q;
      for (int j = 0; j < q; ++j) out[orow + j] += x * bv[brow + j];
    }
  }
  return make_result(
      {p, q}, std::move(out), "matmul", {a.node_ptr(), b.node_ptr()},
      [p, k, q](Node& node) {
        Node& na = *node.parents[0];
        Node& nb = *node.parents[1];
        if (na.requires_grad) {
          na.ensure_grad();
          for (int i = 0; i < p; ++i) {
            for (int j = 0; j < q; ++j) {
              const double g = node.grad[static_cast<size_t>(i) * q + j];
              if (g == 0.0) continue;
              for (int kk = 0; kk < k; ++kk) {
                na.grad[static_cast<size_t>(i) * k + kk] +=
                    g * nb.values[static_cast<size_t>(kk) * q + j];
              }
            }
          }
        }
        if (nb.requires_grad) {
          nb.ensure_grad();
          for (int i = 0; i < p; ++i) {
            for (int kk = 0; kk < k; ++kk) {
              const double x = na.values[static_cast<size_t>(i) * k + kk];
              if (x == 0.0) continue;
              for (int j = 0; j < q; ++j) {
                nb.grad[static_cast<size_t>(kk) * q + j] +=
                    x * node.grad[static_cast<size_t>(i) * q + j];
              }
            }
          }
        }
      });
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("softmax_rows expects a 2-D tensor");
  const int p = a.dim(0), c = a.dim(1);
  std::vector<double> out(static_cast<size_t>(a.size()));
  const auto av = a.values();
  for (int i = 0; i < p; ++i) {
    const size_t row = static_cast<size_t>(i) * c;
    double m = av[row];
    for (int j = 1; j < c; ++j) m = std::max(m, av[row + j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      out[row + j] = std::exp(av[row + j] - m);
      z += out[row + j];
    }
    for (int j = 0; j < c; ++j) out[row + j] /= z;
  }
  return make_result({p, c}, std::move(out), "softmax_rows", {a.node_ptr()},
                     [p, c](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (int i = 0; i < p; ++i) {
                         const size_t row = static_cast<size_t>(i) * c;
                         double dot = 0.0;
                         for (int j = 0; j < c; ++j) {
                           dot += node.grad[row + j] * node.values[row + j];
                         }
                         for (int j = 0; j < c; ++j) {
                           na.grad[row + j] +=
                               node.values[row + j] * (node.grad[row + j] - dot);
                         }
                       }
                     });
}

Tensor logsumexp_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("logsumexp_rows expects a 2-D tensor");
  const int p = a.dim(0), c = a.dim(1);
  std::vector<double> out(static_cast<size_t>(p));
  const auto av = a.values();
  for (int i = 0; i < p; ++i) {
    const size_t row = static_cast<size_t>(i) * c;
    double m = av[row];
    for (int j = 1; j < c; ++j) m = std::max(m, av[row + j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(av[row + j] - m);
    out[static_cast<size_t>(i)] = m + std::log(z);
  }
  return make_result({p}, std::move(out), "logsumexp_rows", {a.node_ptr()},
                     [p, c](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (int i = 0; i < p; ++i) {
                         const double g = node.grad[static_cast<size_t>(i)];
                         if (g == 0.0) continue;
                         const size_t row = static_cast<size_t>(i) * c;
                         const double lse = node.values[static_cast<size_t>(i)];
                         for (int j = 0; j < c; ++j) {
                           na.grad[row + j] += g * std::exp(na.values[row + j] - lse);
                         }
                       }
                     });
}

Tensor take_row_cols(const Tensor& a, const std::vector<int>& col_of_row) {
  if (a.rank() != 2) throw ShapeError("take_row_cols expects a 2-D tensor");
  const int p = a.dim(0), c = a.dim(1);
  if (static_cast<int>(col_of_row.size()) != p) {
    throw ShapeError("take_row_cols: one column index per row required");
  }
  std::vector<double> out(static_cast<size_t>(p));
  const auto av = a.values();
  for (int i = 0; i < p; ++i) {
    const int j = col_of_row[static_cast<size_t>(i)];
    if (j < 0 || j >= c) throw ShapeError("take_row_cols: column out of range");
    out[static_cast<size_t>(i)] = av[static_cast<size_t>(i) * c + j];
  }
  return make_result({p}, std::move(out), "take_row_cols", {a.node_ptr()},
                     [col_of_row, c](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < node.grad.size(); ++i) {
                         na.grad[i * c + col_of_row[i]] += node.grad[i];
                       }
                     });
}

Tensor gather_flat(const Tensor& a, const std::vector<int64_t>& indices) {
  std::vector<double> out(indices.size());
  const auto av = a.values();
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a.size()) {
      throw ShapeError("gather_flat: index out of range");
    }
    out[i] = av[static_cast<size_t>(indices[i])];
  }
  return make_result({static_cast<int>(indices.size())}, std::move(out),
                     "gather_flat", {a.node_ptr()}, [indices](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < indices.size(); ++i) {
                         na.grad[static_cast<size_t>(indices[i])] += node.grad[i];
                       }
                     });
}

Tensor gather_positions(const Tensor& hwc, const std::vector<Position>& pos) {
  if (hwc.rank() != 3) throw ShapeError("gather_positions expects [H,W,C]");
  const int h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
  std::vector<double> out(pos.size() * static_cast<size_t>(c));
  const auto av = hwc.values();
  for (size_t i = 0; i < pos.size(); ++i) {
    if (pos[i].row < 0 || pos[i].row >= h || pos[i].col < 0 || pos[i].col >= w) {
      throw ShapeError("gather_positions: position out of bounds");
    }
    const size_t src = (static_cast<size_t>(pos[i].row) * w + pos[i].col) * c;
    for (int ch = 0; ch < c; ++ch) out[i * c + ch] = av[src + ch];
  }
  return make_result({static_cast<int>(pos.size()), c}, std::move(out),
                     "gather_positions", {hwc.node_ptr()}, [pos, w, c](Node& node) {
                       Node& na = *node.parents[0];
                       na.ensure_grad();
                       for (size_t i = 0; i < pos.size(); ++i) {
                         const size_t src =
                             (static_cast<size_t>(pos[i].row) * w + pos[i].col) * c;
                         for (int ch = 0; ch < c; ++ch) {
                           na.grad[src + ch] += node.grad[i * c + ch];
                         }
                       }
                     });
}

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw ShapeError("cosine_matrix: channel counts must match, got " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  constexpr double kZeroNorm = 1e-12;
  const int n = a.dim(0), m = b.dim(0), c = a.dim(1);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> na_(static_cast<size_t>(n)), nb_(static_cast<size_t>(m));
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double v = av[static_cast<size_t>(i) * c + ch];
      s += v * v;
    }
    na_[static_cast<size_t>(i)] = std::sqrt(s);
  }
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double v = bv[static_cast<size_t>(j) * c + ch];
      s += v * v;
    }
    nb_[static_cast<size_t>(j)] = std::sqrt(s);
  }
  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    if (na_[static_cast<size_t>(i)] < kZeroNorm) continue;  // zero vector -> 0
    for (int j = 0; j < m; ++j) {
      if (nb_[static_cast<size_t>(j)] < kZeroNorm) continue;
      double dot = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        dot += av[static_cast<size_t>(i) * c + ch] * bv[static_cast<size_t>(j) * c + ch];
      }
      out[static_cast<size_t>(i) * m + j] =
          dot / (na_[static_cast<size_t>(i)] * nb_[static_cast<size_t>(j)]);
    }
  }
  auto norms_a = std::make_shared<std::vector<double>>(std::move(na_));
  auto norms_b = std::make_shared<std::vector<double>>(std::move(nb_));
  return make_result(
      {n, m}, std::move(out), "cosine_matrix", {a.node_ptr(), b.node_ptr()},
      [n, m, c, norms_a, norms_b](Node& node) {
        Node& na = *node.parents[0];
        Node& nb = *node.parents[1];
        if (na.requires_grad) na.ensure_grad();
        if (nb.requires_grad) nb.ensure_grad();
        for (int i = 0; i < n; ++i) {
          const double ni = (*norms_a)[static_cast<size_t>(i)];
          if (ni < kZeroNorm) continue;
          for (int j = 0; j < m; ++j) {
            const double nj = (*norms_b)[static_cast<size_t>(j)];
            if (nj < kZeroNorm) continue;
            const double g = node.grad[static_cast<size_t>(i) * m + j];
            if (g == 0.0) continue;
            const double cos_ij = node.values[static_cast<size_t>(i) * m + j];
            for (int ch = 0; ch < c; ++ch) {
              const double x = na.values[static_cast<size_t>(i) * c + ch];
              const double y = nb.values[static_cast<size_t>(j) * c + ch];
              if (na.requires_grad) {
                na.grad[static_cast<size_t>(i) * c + ch] +=
                    g * (y / (ni * nj) - cos_ij * x / (ni * ni));
              }
              if (nb.requires_grad) {
                nb.grad[static_cast<size_t>(j) * c + ch] +=
                    g * (x / (ni * nj) - cos_ij * y / (nj * nj));
              }
            }
          }
        }
      });
}

}  // namespace tscd
