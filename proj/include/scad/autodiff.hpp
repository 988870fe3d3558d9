// Copyright 2026 The scad-gan Authors. All Rights Reserved.
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
#include <vector>

#include "scad/kernels.hpp"
#include "scad/tensor.hpp"

// Reverse-mode automatic differentiation over 2-D tensors.
//
// Backward rules are themselves written with the differentiable operations
// below, so gradients can be differentiated again (create_graph). The
// gradient penalties need exactly that: a norm of d(score)/d(features)
// that is then optimised with respect to the discriminator weights.
namespace scad::ad {

class Var;

/// Returns one gradient per input (an undefined Var means "no gradient").
using BackwardFn = std::function<std::vector<Var>(const Var& grad_out, const Var& self)>;

struct Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<Var> inputs;
  BackwardFn backward;
  const char* op = "leaf";
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var constant(Tensor value) { return Var(std::move(value), false); }
  static Var leaf(Tensor value) { return Var(std::move(value), true); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// In-place access for optimisers; never call on a non-leaf.
  Tensor& mutable_value() { return node_->value; }
  std::int64_t rows() const { return node_->value.rows(); }
  std::int64_t cols() const { return node_->value.cols(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool is_leaf() const noexcept { return node_ && !node_->backward; }
  const char* op() const { return node_->op; }
  double item() const;

  Node* node() const noexcept { return node_.get(); }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_op(Tensor, std::vector<Var>, BackwardFn, const char*);
  friend std::vector<Var> grad(const Var&, std::span<const Var>, bool);

  std::shared_ptr<Node> node_;
};

bool grad_enabled() noexcept;

/// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Records a node when grad mode is on and any input requires grad,
/// otherwise returns a constant.
Var make_op(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* name);

/// Gradients of sum(output) with respect to each of `wrt`. Inputs that do not
/// influence the output get an all-zero gradient. With create_graph the
/// returned gradients are themselves differentiable.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph = false);
inline std::vector<Var> grad(const Var& output, std::initializer_list<Var> wrt,
                             bool create_graph = false) {
  return grad(output, std::span<const Var>(wrt.begin(), wrt.size()), create_graph);
}

// Elementwise. Binary operations require identical shapes; use the
// broadcast helpers to expand rows/columns explicitly.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// a^p elementwise. Non-integer p requires a > 0.
Var pow_scalar(const Var& a, double p);
Var tanh(const Var& a);
Var leaky_relu(const Var& a, double slope);
inline Var relu(const Var& a) { return leaky_relu(a, 0.0); }
/// min(0, a)
Var min_zero(const Var& a);

Var matmul(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);

// Reductions and their adjoints.
Var sum(const Var& a);                                           // -> [1, 1]
Var broadcast_scalar(const Var& a, std::int64_t rows, std::int64_t cols);
Var sum_cols(const Var& a);                                      // [N, D] -> [N, 1]
Var broadcast_cols(const Var& a, std::int64_t cols);             // [N, 1] -> [N, D]
Var sum_rows(const Var& a);                                      // [N, D] -> [1, D]
Var broadcast_rows(const Var& a, std::int64_t rows);             // [1, D] -> [N, D]

// Layout.
Var reshape(const Var& a, std::int64_t rows, std::int64_t cols);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, std::int64_t begin, std::int64_t end);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, std::int64_t begin, std::int64_t end);
inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}
inline Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

/// out.flat[j] = a.flat[map[j]] (0 where map[j] == -1), shaped [rows, cols].
Var gather(const Var& a, std::shared_ptr<const kernels::IndexMap> map, std::int64_t rows,
           std::int64_t cols);
/// Adjoint of gather: accumulates a into a zero tensor of shape [rows, cols].
Var scatter_add(const Var& a, std::shared_ptr<const kernels::IndexMap> map, std::int64_t rows,
                std::int64_t cols);

/// Stop-gradient: same value, cut from the graph.
Var detach(const Var& a);

// Composite helpers.
inline Var neg(const Var& a) { return scale(a, -1.0); }
Var mean(const Var& a);
Var square(const Var& a);
/// x + bias where bias is [1, D].
Var add_row(const Var& x, const Var& bias);
/// x * s where s is [N, 1], scaling each row.
Var mul_col(const Var& x, const Var& s);
/// Row-wise inner product of equally shaped matrices, [N, D] -> [N, 1].
Var row_dot(const Var& a, const Var& b);
/// Row-wise x / sqrt(|x|^2 + eps).
Var l2_normalize_rows(const Var& x, double eps = 1e-12);
/// Zero-mean, unit-variance rows (no affine parameters).
Var layer_norm_rows(const Var& x, double eps = 1e-5);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace scad::ad
