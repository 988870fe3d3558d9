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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scad/archive.hpp"
#include "scad/config.hpp"
#include "scad/dataset.hpp"

namespace scad {

/// Everything a run mutates, plus the frozen encoders it reads.
struct TrainState {
  TrainConfig config;
  std::shared_ptr<const ImageEncoder> encoder;
  std::unique_ptr<TextEncoder> text;
  std::unique_ptr<Generator> generator;
  std::unique_ptr<Discriminator> discriminator;
  nn::Adam opt_g;
  nn::Adam opt_d;
  Rng rng;
  std::int64_t step = 0;
};

/// Resolves `config` and builds freshly initialised models.
TrainState make_train_state(TrainConfig config);

/// One discriminator ascent step on the combined objective (fakes
/// detached), then one generator descent step against the updated,
/// evaluation-mode discriminator. Non-finite terms raise NumericError with
/// the term values in the message.
TermRecord train_step(TrainState& state, const HostBatch& batch);

/// Checkpoint sections: meta, generator/*, discriminator/*, optimizer/*, rng.
Archive checkpoint_archive(const TrainState& state);
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
  /// In-memory data; when null the config's manifest is loaded.
  const Dataset* dataset = nullptr;
  std::optional<std::filesystem::path> resume;
  /// Stop after this many steps in this call (for tests); -1 runs to the end.
  std::int64_t max_steps = -1;
  std::function<void(const TermRecord&)> on_step;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::vector<TermRecord> log;
};

/// Runs epochs x steps_per_epoch steps, writing <dir>/loss.csv, periodic
/// checkpoints under <dir>/checkpoints/ and sample grids under <dir>/samples/.
TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

/// n images for one prompt from seeded noise: [n, S*S*3].
Tensor sample_prompt(const Generator& generator, const TextEncoder& text,
                     const std::string& prompt, int n, std::uint64_t seed);

/// Writes <dir>/<prompt-slug>_<i>.png for each row; returns the paths.
std::vector<std::filesystem::path> write_samples(const std::filesystem::path& dir,
                                                 const std::string& prompt, const Tensor& images,
                                                 int image_size);

/// One folder per prompt, <dir>/<prompt-slug>/<i>.png, the layout external
/// FID tools read.
void export_images(const Generator& generator, const TextEncoder& text,
                   const std::vector<std::string>& prompts, int n, std::uint64_t seed,
                   const std::filesystem::path& dir);

}  // namespace scad
