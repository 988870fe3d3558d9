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

// Serial reference kernels against their OpenMP counterparts.
//
//   ./build/bench/bench_kernels --benchmark_filter=Matmul
//   OMP_NUM_THREADS=4 ./build/bench/bench_kernels

#include <benchmark/benchmark.h>

#include "scad/kernels.hpp"
#include "scad/nn.hpp"
#include "scad/rng.hpp"

namespace {

using scad::Rng;
using scad::Tensor;
namespace kernels = scad::kernels;

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(1);
  const Tensor a = rng.normal_tensor(n, n);
  const Tensor b = rng.normal_tensor(n, n);
  Tensor c(n, n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::matmul(a, false, b, false, c);
    } else {
      kernels::reference::matmul(a, false, b, false, c);
    }
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul<false>)->Name("Matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Name("Matmul/parallel")->Arg(64)->Arg(256);

// The weight-gradient shape of a 3x3 conv at 32x32: [B*H*W, 9C]^T * [B*H*W, C'].
template <bool Parallel>
void BM_ConvWeightGrad(benchmark::State& state) {
  const std::int64_t rows = 32 * 32 * 32;
  Rng rng(2);
  const Tensor cols = rng.normal_tensor(rows, 144);
  const Tensor g = rng.normal_tensor(rows, 8);
  Tensor out(144, 8);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::matmul(cols, true, g, false, out);
    } else {
      kernels::reference::matmul(cols, true, g, false, out);
    }
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_ConvWeightGrad<false>)->Name("ConvWeightGrad/reference");
BENCHMARK(BM_ConvWeightGrad<true>)->Name("ConvWeightGrad/parallel");

template <bool Parallel>
void BM_Im2col(benchmark::State& state) {
  const std::int64_t batch = 32;
  auto map = scad::nn::im2col_map(batch, 32, 32, 16, 3, 1, 1);
  Rng rng(3);
  const Tensor x = rng.normal_tensor(batch * 32 * 32, 16);
  Tensor cols(map->target_size(), 1);
  Tensor back(x.rows(), x.cols());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::gather(x, *map, cols);
      kernels::parallel::scatter_add(cols, *map, back);
    } else {
      kernels::reference::gather(x, *map, cols);
      kernels::reference::scatter_add(cols, *map, back);
    }
    benchmark::DoNotOptimize(back.data().data());
  }
}
BENCHMARK(BM_Im2col<false>)->Name("Im2colRoundTrip/reference");
BENCHMARK(BM_Im2col<true>)->Name("Im2colRoundTrip/parallel");

}  // namespace

BENCHMARK_MAIN();
