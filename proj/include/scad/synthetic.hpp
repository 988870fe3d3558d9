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
#include <filesystem>
#include <string>
#include <vector>

#include "scad/dataset.hpp"

namespace scad {

/// Conditional toy data: each caption class owns `modes` distinct images
/// (a coloured square in one quadrant), observed with small pixel noise.
struct ModeDataset {
  std::vector<std::string> captions;         // one per class
  std::vector<std::vector<Tensor>> templates;  // [class][mode], rows [1, S*S*3]
  int image_size = 32;

  /// samples_per_mode noisy copies of every template.
  Dataset sample(int samples_per_mode, double noise, std::uint64_t seed) const;
  /// Writes PNGs plus manifest.jsonl into `dir`; returns the manifest path.
  std::filesystem::path write(const std::filesystem::path& dir, int samples_per_mode, double noise,
                              std::uint64_t seed) const;
};

/// Up to four classes ("a red square", "a blue square", ...), four quadrant
/// modes each.
ModeDataset make_mode_dataset(int classes, int image_size = 32);

/// Nearest-template assignment over all classes' templates; a mode of
/// `class_index` counts as recovered when at least `min_hits` samples land
/// on it.
int count_recovered_modes(const Tensor& images, const ModeDataset& set, int class_index,
                          int min_hits = 2);

}  // namespace scad
