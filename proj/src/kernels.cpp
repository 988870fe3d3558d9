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

#include "scad/kernels.hpp"

#include <algorithm>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "scad/errors.hpp"

namespace scad::kernels {

IndexMap::IndexMap(std::int64_t source_size, std::vector<std::int64_t> index)
    : source_size_(source_size), index_(std::move(index)) {
  inverse_offsets_.assign(static_cast<std::size_t>(source_size_ + 1), 0);
  for (auto s : index_) {
    if (s < -1 || s >= source_size_) throw InputError("IndexMap: index out of range");
    if (s >= 0) ++inverse_offsets_[s + 1];
  }
  for (std::int64_t s = 0; s < source_size_; ++s) inverse_offsets_[s + 1] += inverse_offsets_[s];
  inverse_targets_.resize(static_cast<std::size_t>(inverse_offsets_.back()));
  std::vector<std::int64_t> cursor(inverse_offsets_.begin(), inverse_offsets_.end() - 1);
  for (std::int64_t t = 0; t < target_size(); ++t) {
    const auto s = index_[t];
    if (s >= 0) inverse_targets_[cursor[s]++] = t;
  }
}

std::pair<std::int64_t, std::int64_t> matmul_shape(const Tensor& a, bool trans_a, const Tensor& b,
                                                   bool trans_b) {
  const auto m = trans_a ? a.cols() : a.rows();
  const auto ka = trans_a ? a.rows() : a.cols();
  const auto kb = trans_b ? b.cols() : b.rows();
  const auto n = trans_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw InputError("matmul: inner dimensions differ (" + a.shape_string() +
                     (trans_a ? "^T" : "") + " * " + b.shape_string() + (trans_b ? "^T" : "") +
                     ")");
  }
  return {m, n};
}

namespace {

void check_out(const Tensor& a, bool ta, const Tensor& b, bool tb, const Tensor& out) {
  const auto [m, n] = matmul_shape(a, ta, b, tb);
  if (out.rows() != m || out.cols() != n) throw InputError("matmul: output has wrong shape");
}

void check_gather(const Tensor& src, const IndexMap& map, const Tensor& dst) {
  if (src.size() != map.source_size() || dst.size() != map.target_size())
    throw InputError("gather: tensor sizes do not match index map");
}

}  // namespace

namespace reference {

void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& out) {
  check_out(a, trans_a, b, trans_b, out);
  const auto m = out.rows();
  const auto n = out.cols();
  const auto k = trans_a ? a.rows() : a.cols();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) {
        const double av = trans_a ? a(p, i) : a(i, p);
        const double bv = trans_b ? b(j, p) : b(p, j);
        acc += av * bv;
      }
      out(i, j) = acc;
    }
  }
}

void gather(const Tensor& src, const IndexMap& map, Tensor& dst) {
  check_gather(src, map, dst);
  const auto& idx = map.index();
  for (std::int64_t t = 0; t < map.target_size(); ++t) dst[t] = idx[t] < 0 ? 0.0 : src[idx[t]];
}

void scatter_add(const Tensor& src, const IndexMap& map, Tensor& dst) {
  if (src.size() != map.target_size() || dst.size() != map.source_size())
    throw InputError("scatter_add: tensor sizes do not match index map");
  const auto& idx = map.index();
  for (std::int64_t t = 0; t < map.target_size(); ++t)
    if (idx[t] >= 0) dst[idx[t]] += src[t];
}

void sum_rows(const Tensor& src, Tensor& dst) {
  if (dst.rows() != 1 || dst.cols() != src.cols()) throw InputError("sum_rows: bad output shape");
  for (std::int64_t c = 0; c < src.cols(); ++c) dst[c] = 0.0;
  for (std::int64_t r = 0; r < src.rows(); ++r)
    for (std::int64_t c = 0; c < src.cols(); ++c) dst[c] += src(r, c);
}

void sum_cols(const Tensor& src, Tensor& dst) {
  if (dst.rows() != src.rows() || dst.cols() != 1) throw InputError("sum_cols: bad output shape");
  for (std::int64_t r = 0; r < src.rows(); ++r) {
    double acc = 0.0;
    for (std::int64_t c = 0; c < src.cols(); ++c) acc += src(r, c);
    dst[r] = acc;
  }
}

double sum_all(const Tensor& src) {
  double acc = 0.0;
  for (double v : src.data()) acc += v;
  return acc;
}

}  // namespace reference

namespace parallel {

namespace {

// C[i, :] += A[i, p] * B[p, :]
void matmul_nn(const double* a, const double* b, double* c, std::int64_t m, std::int64_t n,
               std::int64_t k) {
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
#pragma omp simd
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[i, j] = dot(A[i, :], B[j, :])
void matmul_nt(const double* a, const double* b, double* c, std::int64_t m, std::int64_t n,
               std::int64_t k) {
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] = acc;
    }
  }
}

// C[i, :] += A[p, i] * B[p, :], rows of C split across threads.
void matmul_tn(const double* a, const double* b, double* c, std::int64_t m, std::int64_t n,
               std::int64_t k) {
  constexpr std::int64_t kBlock = 16;
  const std::int64_t blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (m * n * k > kParallelThreshold)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::int64_t i0 = blk * kBlock;
    const std::int64_t i1 = std::min(m, i0 + kBlock);
    std::fill(c + i0 * n, c + i1 * n, 0.0);
    for (std::int64_t p = 0; p < k; ++p) {
      const double* ap = a + p * m;
      const double* bp = b + p * n;
      for (std::int64_t i = i0; i < i1; ++i) {
        const double av = ap[i];
        double* ci = c + i * n;
#pragma omp simd
        for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

}  // namespace

void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& out) {
  check_out(a, trans_a, b, trans_b, out);
  const auto m = out.rows();
  const auto n = out.cols();
  const auto k = trans_a ? a.rows() : a.cols();
  double* c = out.data().data();
  if (!trans_a && !trans_b) {
    matmul_nn(a.data().data(), b.data().data(), c, m, n, k);
  } else if (!trans_a && trans_b) {
    matmul_nt(a.data().data(), b.data().data(), c, m, n, k);
  } else if (trans_a && !trans_b) {
    matmul_tn(a.data().data(), b.data().data(), c, m, n, k);
  } else {
    const Tensor bt = b.transposed();
    matmul_tn(a.data().data(), bt.data().data(), c, m, n, k);
  }
}

void gather(const Tensor& src, const IndexMap& map, Tensor& dst) {
  check_gather(src, map, dst);
  const auto* idx = map.index().data();
  const double* s = src.data().data();
  double* d = dst.data().data();
  const auto n = map.target_size();
#pragma omp parallel for simd if (n > kParallelThreshold)
  for (std::int64_t t = 0; t < n; ++t) d[t] = idx[t] < 0 ? 0.0 : s[idx[t]];
}

void scatter_add(const Tensor& src, const IndexMap& map, Tensor& dst) {
  if (src.size() != map.target_size() || dst.size() != map.source_size())
    throw InputError("scatter_add: tensor sizes do not match index map");
  const auto* off = map.inverse_offsets().data();
  const auto* tgt = map.inverse_targets().data();
  const double* s = src.data().data();
  double* d = dst.data().data();
  const auto n = map.source_size();
#pragma omp parallel for if (n > kParallelThreshold)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = d[i];
    for (auto q = off[i]; q < off[i + 1]; ++q) acc += s[tgt[q]];
    d[i] = acc;
  }
}

void sum_rows(const Tensor& src, Tensor& dst) {
  if (dst.rows() != 1 || dst.cols() != src.cols()) throw InputError("sum_rows: bad output shape");
  const auto rows = src.rows();
  const auto cols = src.cols();
#pragma omp parallel for if (rows * cols > kParallelThreshold)
  for (std::int64_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) acc += src(r, c);
    dst[c] = acc;
  }
}

void sum_cols(const Tensor& src, Tensor& dst) {
  if (dst.rows() != src.rows() || dst.cols() != 1) throw InputError("sum_cols: bad output shape");
  const auto rows = src.rows();
  const auto cols = src.cols();
#pragma omp parallel for if (rows * cols > kParallelThreshold)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* row = src.data().data() + r * cols;
    double acc = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) acc += row[c];
    dst[r] = acc;
  }
}

double sum_all(const Tensor& src) {
  // Fixed-size chunks summed in order keep the result thread-count independent.
  constexpr std::int64_t kChunk = 4096;
  const auto n = src.size();
  const auto chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
  const double* s = src.data().data();
#pragma omp parallel for if (n > kParallelThreshold)
  for (std::int64_t c = 0; c < chunks; ++c) {
    double acc = 0.0;
    const auto end = std::min(n, (c + 1) * kChunk);
    for (auto i = c * kChunk; i < end; ++i) acc += s[i];
    partial[c] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace parallel

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

}  // namespace scad::kernels
