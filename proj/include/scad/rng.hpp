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
#include <random>
#include <string>
#include <string_view>

#include "scad/tensor.hpp"

namespace scad {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// 64-bit FNV-1a, optionally chained from a previous hash.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
/// Independent stream seed for a named consumer of a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept;

/// Seeded random source with a portable normal sampler.
///
/// The engine is mt19937_64 (fully specified by the standard); normals use
/// Box-Muller on top of it instead of std::normal_distribution, whose
/// algorithm is implementation defined. Values are therefore identical
/// across processes and standard libraries for the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n);
  Tensor normal_tensor(std::int64_t rows, std::int64_t cols, double stddev = 1.0);

  /// Text form of the complete generator state (engine and cached normal).
  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace scad
