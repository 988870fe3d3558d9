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

#include "scad/autodiff.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "scad/errors.hpp"

namespace scad::ad {

namespace {

thread_local bool g_grad_enabled = true;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw InputError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

Tensor elementwise(const Tensor& x, auto f) {
  Tensor y(x.rows(), x.cols());
  kernels::map(x.data(), y.data(), f);
  return y;
}

Tensor elementwise(const Tensor& a, const Tensor& b, auto f) {
  Tensor y(a.rows(), a.cols());
  kernels::zip(a.data(), b.data(), y.data(), f);
  return y;
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  if (value().size() != 1) throw InputError("item: tensor is not a scalar " + value().shape_string());
  return value()[0];
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace {
class GradModeGuard {
 public:
  explicit GradModeGuard(bool on) : previous_(g_grad_enabled) { g_grad_enabled = on; }
  ~GradModeGuard() { g_grad_enabled = previous_; }

 private:
  bool previous_;
};
}  // namespace

Var make_op(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* name) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (!needs) return Var::constant(std::move(value));
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  node->op = name;
  return Var(std::move(node));
}

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph) {
  if (!output.defined()) throw InputError("grad: undefined output");
  GradModeGuard mode(create_graph);

  // Post-order DFS over the part of the graph that requires grad.
  std::vector<Var> order;
  std::unordered_set<Node*> visited;
  if (output.requires_grad()) {
    std::vector<std::pair<Var, std::size_t>> stack{{output, 0}};
    visited.insert(output.node());
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& inputs = v.node()->inputs;
      if (next < inputs.size()) {
        const Var in = inputs[next++];
        if (in.requires_grad() && visited.insert(in.node()).second) stack.emplace_back(in, 0);
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<Node*, Var> grads;
  if (output.requires_grad()) {
    grads[output.node()] = Var::constant(Tensor::ones(output.rows(), output.cols()));
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Var& v = *it;
    auto found = grads.find(v.node());
    if (found == grads.end() || !v.node()->backward) continue;
    const Var g = found->second;
    const auto in_grads = v.node()->backward(g, v);
    const auto& inputs = v.node()->inputs;
    for (std::size_t i = 0; i < inputs.size() && i < in_grads.size(); ++i) {
      if (!inputs[i].requires_grad() || !in_grads[i].defined()) continue;
      auto& slot = grads[inputs[i].node()];
      slot = slot.defined() ? add(slot, in_grads[i]) : in_grads[i];
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = grads.find(w.node());
    if (found != grads.end()) {
      result.push_back(found->second);
    } else {
      result.push_back(Var::constant(Tensor::zeros(w.rows(), w.cols())));
    }
  }
  return result;
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_op(
      elementwise(a.value(), b.value(), [](double x, double y) { return x + y; }), {a, b},
      [](const Var& g, const Var&) { return std::vector<Var>{g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_op(
      elementwise(a.value(), b.value(), [](double x, double y) { return x - y; }), {a, b},
      [](const Var& g, const Var&) { return std::vector<Var>{g, neg(g)}; }, "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_op(
      elementwise(a.value(), b.value(), [](double x, double y) { return x * y; }), {a, b},
      [a, b](const Var& g, const Var&) {
        return std::vector<Var>{a.requires_grad() ? mul(g, b) : Var{},
                                b.requires_grad() ? mul(g, a) : Var{}};
      },
      "mul");
}

Var scale(const Var& a, double s) {
  return make_op(
      elementwise(a.value(), [s](double x) { return s * x; }), {a},
      [s](const Var& g, const Var&) { return std::vector<Var>{scale(g, s)}; }, "scale");
}

Var add_scalar(const Var& a, double s) {
  return make_op(
      elementwise(a.value(), [s](double x) { return x + s; }), {a},
      [](const Var& g, const Var&) { return std::vector<Var>{g}; }, "add_scalar");
}

Var pow_scalar(const Var& a, double p) {
  if (p == 1.0) return a;
  return make_op(
      elementwise(a.value(), [p](double x) { return std::pow(x, p); }), {a},
      [a, p](const Var& g, const Var&) {
        return std::vector<Var>{mul(g, scale(pow_scalar(a, p - 1.0), p))};
      },
      "pow");
}

Var tanh(const Var& a) {
  return make_op(
      elementwise(a.value(), [](double x) { return std::tanh(x); }), {a},
      [](const Var& g, const Var& y) { return std::vector<Var>{sub(g, mul(g, mul(y, y)))}; },
      "tanh");
}

Var leaky_relu(const Var& a, double slope) {
  auto mask = std::make_shared<Var>(Var::constant(
      elementwise(a.value(), [slope](double x) { return x > 0.0 ? 1.0 : slope; })));
  return make_op(
      elementwise(a.value(), [slope](double x) { return x > 0.0 ? x : slope * x; }), {a},
      [mask](const Var& g, const Var&) { return std::vector<Var>{mul(g, *mask)}; },
      "leaky_relu");
}

Var min_zero(const Var& a) {
  auto mask = std::make_shared<Var>(
      Var::constant(elementwise(a.value(), [](double x) { return x < 0.0 ? 1.0 : 0.0; })));
  return make_op(
      elementwise(a.value(), [](double x) { return x < 0.0 ? x : 0.0; }), {a},
      [mask](const Var& g, const Var&) { return std::vector<Var>{mul(g, *mask)}; }, "min_zero");
}

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
  const auto [m, n] = kernels::matmul_shape(a.value(), ta, b.value(), tb);
  Tensor out(m, n);
  kernels::matmul(a.value(), ta, b.value(), tb, out);
  return make_op(
      std::move(out), {a, b},
      [a, b, ta, tb](const Var& g, const Var&) {
        Var ga;
        Var gb;
        if (!ta && !tb) {
          if (a.requires_grad()) ga = matmul(g, b, false, true);
          if (b.requires_grad()) gb = matmul(a, g, true, false);
        } else if (ta && !tb) {
          if (a.requires_grad()) ga = matmul(b, g, false, true);
          if (b.requires_grad()) gb = matmul(a, g, false, false);
        } else if (!ta && tb) {
          if (a.requires_grad()) ga = matmul(g, b, false, false);
          if (b.requires_grad()) gb = matmul(g, a, true, false);
        } else {
          if (a.requires_grad()) ga = matmul(b, g, true, true);
          if (b.requires_grad()) gb = matmul(g, a, true, true);
        }
        return std::vector<Var>{ga, gb};
      },
      "matmul");
}

Var sum(const Var& a) {
  const auto rows = a.rows();
  const auto cols = a.cols();
  return make_op(
      Tensor::scalar(kernels::sum_all(a.value())), {a},
      [rows, cols](const Var& g, const Var&) {
        return std::vector<Var>{broadcast_scalar(g, rows, cols)};
      },
      "sum");
}

Var broadcast_scalar(const Var& a, std::int64_t rows, std::int64_t cols) {
  if (a.value().size() != 1) throw InputError("broadcast_scalar: input is not 1x1");
  return make_op(
      Tensor(rows, cols, a.value()[0]), {a},
      [](const Var& g, const Var&) { return std::vector<Var>{sum(g)}; }, "broadcast_scalar");
}

Var sum_cols(const Var& a) {
  Tensor out(a.rows(), 1);
  kernels::sum_cols(a.value(), out);
  const auto cols = a.cols();
  return make_op(
      std::move(out), {a},
      [cols](const Var& g, const Var&) { return std::vector<Var>{broadcast_cols(g, cols)}; },
      "sum_cols");
}

Var broadcast_cols(const Var& a, std::int64_t cols) {
  if (a.cols() != 1) throw InputError("broadcast_cols: input must be [N, 1]");
  Tensor out(a.rows(), cols);
  for (std::int64_t r = 0; r < a.rows(); ++r)
    for (std::int64_t c = 0; c < cols; ++c) out(r, c) = a.value()[r];
  return make_op(
      std::move(out), {a}, [](const Var& g, const Var&) { return std::vector<Var>{sum_cols(g)}; },
      "broadcast_cols");
}

Var sum_rows(const Var& a) {
  Tensor out(1, a.cols());
  kernels::sum_rows(a.value(), out);
  const auto rows = a.rows();
  return make_op(
      std::move(out), {a},
      [rows](const Var& g, const Var&) { return std::vector<Var>{broadcast_rows(g, rows)}; },
      "sum_rows");
}

Var broadcast_rows(const Var& a, std::int64_t rows) {
  if (a.rows() != 1) throw InputError("broadcast_rows: input must be [1, D]");
  Tensor out(rows, a.cols());
  for (std::int64_t r = 0; r < rows; ++r)
    std::copy(a.value().data().begin(), a.value().data().end(), out.data().begin() + r * a.cols());
  return make_op(
      std::move(out), {a}, [](const Var& g, const Var&) { return std::vector<Var>{sum_rows(g)}; },
      "broadcast_rows");
}

Var reshape(const Var& a, std::int64_t rows, std::int64_t cols) {
  if (a.rows() == rows && a.cols() == cols) return a;
  const auto r0 = a.rows();
  const auto c0 = a.cols();
  return make_op(
      a.value().reshaped(rows, cols), {a},
      [r0, c0](const Var& g, const Var&) { return std::vector<Var>{reshape(g, r0, c0)}; },
      "reshape");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InputError("concat_cols: no inputs");
  const auto rows = parts.front().rows();
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw InputError("concat_cols: row count mismatch");
    offsets.push_back(cols);
    cols += p.cols();
  }
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = parts[i].value();
    for (std::int64_t r = 0; r < rows; ++r)
      std::copy_n(v.data().begin() + r * v.cols(), v.cols(),
                  out.data().begin() + r * cols + offsets[i]);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::int64_t> widths;
  for (const auto& p : parts) widths.push_back(p.cols());
  return make_op(
      std::move(out), inputs,
      [offsets, widths](const Var& g, const Var&) {
        std::vector<Var> gs;
        for (std::size_t i = 0; i < offsets.size(); ++i)
          gs.push_back(slice_cols(g, offsets[i], offsets[i] + widths[i]));
        return gs;
      },
      "concat_cols");
}

Var slice_cols(const Var& a, std::int64_t begin, std::int64_t end) {
  if (begin < 0 || end > a.cols() || begin > end) throw InputError("slice_cols: out of range");
  if (begin == 0 && end == a.cols()) return a;
  const auto rows = a.rows();
  const auto width = end - begin;
  Tensor out(rows, width);
  for (std::int64_t r = 0; r < rows; ++r)
    std::copy_n(a.value().data().begin() + r * a.cols() + begin, width,
                out.data().begin() + r * width);
  const auto total = a.cols();
  return make_op(
      std::move(out), {a},
      [rows, begin, end, total](const Var& g, const Var&) {
        std::vector<Var> pieces;
        if (begin > 0) pieces.push_back(Var::constant(Tensor::zeros(rows, begin)));
        pieces.push_back(g);
        if (end < total) pieces.push_back(Var::constant(Tensor::zeros(rows, total - end)));
        return std::vector<Var>{concat_cols(pieces)};
      },
      "slice_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw InputError("concat_rows: no inputs");
  const auto cols = parts.front().cols();
  std::vector<Tensor> values;
  std::vector<std::int64_t> offsets;
  std::int64_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw InputError("concat_rows: column count mismatch");
    offsets.push_back(rows);
    rows += p.rows();
    values.push_back(p.value());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::int64_t> heights;
  for (const auto& p : parts) heights.push_back(p.rows());
  return make_op(
      vstack(values), inputs,
      [offsets, heights](const Var& g, const Var&) {
        std::vector<Var> gs;
        for (std::size_t i = 0; i < offsets.size(); ++i)
          gs.push_back(slice_rows(g, offsets[i], offsets[i] + heights[i]));
        return gs;
      },
      "concat_rows");
}

Var slice_rows(const Var& a, std::int64_t begin, std::int64_t end) {
  if (begin == 0 && end == a.rows()) return a;
  const auto cols = a.cols();
  const auto total = a.rows();
  return make_op(
      a.value().row_slice(begin, end), {a},
      [cols, begin, end, total](const Var& g, const Var&) {
        std::vector<Var> pieces;
        if (begin > 0) pieces.push_back(Var::constant(Tensor::zeros(begin, cols)));
        pieces.push_back(g);
        if (end < total) pieces.push_back(Var::constant(Tensor::zeros(total - end, cols)));
        return std::vector<Var>{concat_rows(pieces)};
      },
      "slice_rows");
}

Var gather(const Var& a, std::shared_ptr<const kernels::IndexMap> map, std::int64_t rows,
           std::int64_t cols) {
  Tensor out(rows, cols);
  kernels::gather(a.value(), *map, out);
  const auto r0 = a.rows();
  const auto c0 = a.cols();
  return make_op(
      std::move(out), {a},
      [map, r0, c0](const Var& g, const Var&) {
        return std::vector<Var>{scatter_add(g, map, r0, c0)};
      },
      "gather");
}

Var scatter_add(const Var& a, std::shared_ptr<const kernels::IndexMap> map, std::int64_t rows,
                std::int64_t cols) {
  Tensor out(rows, cols);
  kernels::scatter_add(a.value(), *map, out);
  const auto r0 = a.rows();
  const auto c0 = a.cols();
  return make_op(
      std::move(out), {a},
      [map, r0, c0](const Var& g, const Var&) { return std::vector<Var>{gather(g, map, r0, c0)}; },
      "scatter_add");
}

Var detach(const Var& a) { return Var::constant(a.value()); }

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var square(const Var& a) { return mul(a, a); }

Var add_row(const Var& x, const Var& bias) { return add(x, broadcast_rows(bias, x.rows())); }

Var mul_col(const Var& x, const Var& s) { return mul(x, broadcast_cols(s, x.cols())); }

Var row_dot(const Var& a, const Var& b) { return sum_cols(mul(a, b)); }

Var l2_normalize_rows(const Var& x, double eps) {
  const Var inv_norm = pow_scalar(add_scalar(sum_cols(square(x)), eps), -0.5);
  return mul_col(x, inv_norm);
}

Var layer_norm_rows(const Var& x, double eps) {
  const double inv_d = 1.0 / static_cast<double>(x.cols());
  const Var centered = sub(x, broadcast_cols(scale(sum_cols(x), inv_d), x.cols()));
  const Var var = scale(sum_cols(square(centered)), inv_d);
  return mul_col(centered, pow_scalar(add_scalar(var, eps), -0.5));
}

}  // namespace scad::ad
