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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace scad {

/// Dense row-major matrix of doubles.
///
/// Every tensor in the library is two-dimensional. Batched images are stored
/// NHWC and viewed either as [B, H*W*C] or as [B*H*W, C]; token grids are
/// [B*L, D]. Reshaping between those views never moves data.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::int64_t rows, std::int64_t cols, double fill = 0.0);
  Tensor(std::int64_t rows, std::int64_t cols, std::vector<double> data);

  static Tensor zeros(std::int64_t rows, std::int64_t cols) { return Tensor(rows, cols); }
  static Tensor ones(std::int64_t rows, std::int64_t cols) { return Tensor(rows, cols, 1.0); }
  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::initializer_list<double> values);
  static Tensor column(std::initializer_list<double> values);
  static Tensor identity(std::int64_t n);

  std::int64_t rows() const noexcept { return rows_; }
  std::int64_t cols() const noexcept { return cols_; }
  std::int64_t size() const noexcept { return rows_ * cols_; }
  bool empty() const noexcept { return size() == 0; }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator()(std::int64_t r, std::int64_t c) { return data_[r * cols_ + c]; }
  double operator()(std::int64_t r, std::int64_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::int64_t i) { return data_[i]; }
  double operator[](std::int64_t i) const { return data_[i]; }

  /// Same data, new shape. Throws InputError when the element count differs.
  Tensor reshaped(std::int64_t rows, std::int64_t cols) const;
  Tensor transposed() const;
  Tensor row_slice(std::int64_t begin, std::int64_t end) const;
  Tensor row_at(std::int64_t r) const { return row_slice(r, r + 1); }

  bool all_finite() const noexcept;
  double max_abs() const noexcept;

  std::string shape_string() const;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<double> data_;
};

bool operator==(const Tensor& a, const Tensor& b) noexcept;

/// Stacks equally wide tensors on top of each other.
Tensor vstack(std::span<const Tensor> parts);
inline Tensor vstack(std::initializer_list<Tensor> parts) {
  return vstack(std::span<const Tensor>(parts.begin(), parts.size()));
}

}  // namespace scad
