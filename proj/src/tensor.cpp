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

#include "scad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scad/errors.hpp"

namespace scad {

Tensor::Tensor(std::int64_t rows, std::int64_t cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {
  if (rows < 0 || cols < 0) throw InputError("Tensor: negative dimension");
}

Tensor::Tensor(std::int64_t rows, std::int64_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0 || static_cast<std::int64_t>(data_.size()) != rows * cols) {
    throw InputError("Tensor: data size does not match shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, static_cast<std::int64_t>(values.size()), std::vector<double>(values));
}

Tensor Tensor::column(std::initializer_list<double> values) {
  return Tensor(static_cast<std::int64_t>(values.size()), 1, std::vector<double>(values));
}

Tensor Tensor::identity(std::int64_t n) {
  Tensor t(n, n);
  for (std::int64_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::reshaped(std::int64_t rows, std::int64_t cols) const {
  if (rows * cols != size()) {
    throw InputError("reshape: cannot view " + shape_string() + " as " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  return Tensor(rows, cols, data_);
}

Tensor Tensor::transposed() const {
  Tensor t(cols_, rows_);
  for (std::int64_t r = 0; r < rows_; ++r)
    for (std::int64_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Tensor Tensor::row_slice(std::int64_t begin, std::int64_t end) const {
  if (begin < 0 || end > rows_ || begin > end) throw InputError("row_slice: out of range");
  return Tensor(end - begin, cols_,
                std::vector<double>(data_.begin() + begin * cols_, data_.begin() + end * cols_));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "[" << rows_ << " x " << cols_ << "]";
  return os.str();
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
  return a.same_shape(b) && a.storage() == b.storage();
}

Tensor vstack(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  const auto cols = parts.front().cols();
  std::int64_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw InputError("vstack: column count mismatch");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(rows * cols));
  for (const auto& p : parts) data.insert(data.end(), p.storage().begin(), p.storage().end());
  return Tensor(rows, cols, std::move(data));
}

}  // namespace scad
