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
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scad/discriminator.hpp"
#include "scad/encoders.hpp"
#include "scad/generator.hpp"
#include "scad/losses.hpp"

namespace scad {

struct OutputConfig {
  std::filesystem::path dir = "runs/scad";
  /// Checkpoint / sample-grid cadence in steps; 0 disables (a final
  /// checkpoint is always written).
  int checkpoint_every = 500;
  int sample_every = 500;
  std::vector<std::string> sample_prompts;
};

struct TrainConfig {
  Preset preset = Preset::scad;
  int batch_size = 64;
  int epochs = 1;
  /// 0 means dataset size / batch size (at least 1).
  int steps_per_epoch = 0;
  nn::AdamOptions adam_g{.lr = 1e-4};
  nn::AdamOptions adam_d{.lr = 4e-4};
  std::filesystem::path dataset;
  int image_size = 32;
  std::uint64_t seed = 0;
  bool allow_experimental_mi_dd = false;

  LossConfig loss;
  GeneratorConfig generator{.d_z = 100, .d_c = 64};
  EncoderSpec encoder;
  TextEncoderSpec text_encoder;
  EmbedderSpec embedder;
  DiscriminatorConfig discriminator{.d_h = 128};
  OutputConfig output;

  /// Propagates shared sizes and seeds and applies the preset (which fixes
  /// lambda and the allocated heads). Raises ConfigurationError on
  /// inconsistent settings.
  void resolve();
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Unknown keys raise ConfigurationError; absent keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Sets `dotted.key` in a JSON tree. The value is parsed as JSON when it
/// parses, otherwise taken as a string.
void apply_override(nlohmann::json& tree, std::string_view dotted_key, std::string_view value);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace scad
