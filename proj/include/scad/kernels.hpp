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
#include <span>
#include <vector>

#include "scad/tensor.hpp"

namespace scad::kernels {

/// Element index table for gather / scatter-add.
///
/// Target element j reads source element index[j]; -1 means "write zero".
/// The inverse (source -> list of targets) is built once so that
/// scatter-add can be parallelised over source elements without atomics.
class IndexMap {
 public:
  IndexMap(std::int64_t source_size, std::vector<std::int64_t> index);

  std::int64_t source_size() const noexcept { return source_size_; }
  std::int64_t target_size() const noexcept { return static_cast<std::int64_t>(index_.size()); }
  const std::vector<std::int64_t>& index() const noexcept { return index_; }

  // CSR layout: targets of source s are inverse_targets[inverse_offsets[s] .. inverse_offsets[s+1]).
  const std::vector<std::int64_t>& inverse_offsets() const noexcept { return inverse_offsets_; }
  const std::vector<std::int64_t>& inverse_targets() const noexcept { return inverse_targets_; }

 private:
  std::int64_t source_size_;
  std::vector<std::int64_t> index_;
  std::vector<std::int64_t> inverse_offsets_;
  std::vector<std::int64_t> inverse_targets_;
};

// Serial implementations. They are the ground truth the parallel kernels are
// tested against and the baseline in the benchmark binary.
namespace reference {

/// out = op(a) * op(b); out must already have the result shape.
void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& out);
void gather(const Tensor& src, const IndexMap& map, Tensor& dst);
/// dst += scatter(src); dst.size() == map.source_size().
void scatter_add(const Tensor& src, const IndexMap& map, Tensor& dst);
/// [N, D] -> [1, D]
void sum_rows(const Tensor& src, Tensor& dst);
/// [N, D] -> [N, 1]
void sum_cols(const Tensor& src, Tensor& dst);
double sum_all(const Tensor& src);

}  // namespace reference

// OpenMP implementations. Every output element is produced by exactly one
// thread with a fixed accumulation order, so results do not depend on the
// thread count.
namespace parallel {

void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& out);
void gather(const Tensor& src, const IndexMap& map, Tensor& dst);
void scatter_add(const Tensor& src, const IndexMap& map, Tensor& dst);
void sum_rows(const Tensor& src, Tensor& dst);
void sum_cols(const Tensor& src, Tensor& dst);
double sum_all(const Tensor& src);

}  // namespace parallel

using parallel::gather;
using parallel::matmul;
using parallel::scatter_add;
using parallel::sum_all;
using parallel::sum_cols;
using parallel::sum_rows;

/// Result shape of op(a) * op(b); throws InputError on inner-dimension mismatch.
std::pair<std::int64_t, std::int64_t> matmul_shape(const Tensor& a, bool trans_a, const Tensor& b,
                                                   bool trans_b);

/// Below this many elements elementwise loops stay on one thread.
inline constexpr std::int64_t kParallelThreshold = 1 << 14;

template <class F>
void map(std::span<const double> x, std::span<double> y, F f) {
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for simd if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class F>
void zip(std::span<const double> a, std::span<const double> b, std::span<double> y, F f) {
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for simd if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

/// Number of OpenMP worker threads (1 when built without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace scad::kernels
