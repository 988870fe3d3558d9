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
#include <memory>
#include <vector>

#include "scad/encoders.hpp"
#include "scad/nn.hpp"

namespace scad {

struct GeneratorConfig {
  int d_z = 100;
  int d_c = 64;
  int image_size = 32;
  /// Non-negative feat1 (relu) instead of per-token layer normalisation.
  bool positive_feature_restriction = false;
  /// Hidden width of Dec1 and the prompt tuner.
  int hidden = 128;
  /// Channel count of the first Dec2 stage; halves per upsampling, floor 8.
  int width = 64;
  /// Tokens injected per prompt-tuned encoder layer.
  int injection_tokens = 4;
  std::uint64_t seed = 0;

  void validate(const EncoderSpec& encoder) const;
};

/// Images plus the intermediate features that produced them.
struct GeneratorOutput {
  Var images;  // [B, S*S*3], in [-1, 1]
  FeatureGrid feat1;
  FeatureGrid feat2;
};

/// Dec1 drafts feat1 from (z, c), the frozen encoder refines it into feat2
/// with prompt-tuner tokens injected, and Dec2 renders pixels from both.
///
/// z is [B, d_z]; c is [B, d_c] or a single row shared by the batch.
class Generator {
 public:
  Generator(GeneratorConfig config, std::shared_ptr<const ImageEncoder> encoder);

  FeatureGrid bridge_predict(const Var& z, const Var& c) const;
  Injections prompt_tune(const Var& z, const Var& c) const;
  Var decode(const FeatureGrid& feat1, const FeatureGrid& feat2) const;

  GeneratorOutput forward(const Var& z, const Var& c) const;
  Var generate(const Var& z, const Var& c) const { return forward(z, c).images; }

  /// Frames for z_t = (1 - t) z0 + t z1 on an even t grid; steps >= 2.
  std::vector<Tensor> interpolate(const Tensor& z0, const Tensor& z1, int steps,
                                  const Tensor& c) const;

  /// Zeroes the prompt tuner's z weights, leaving its tokens c-only.
  void zero_prompt_noise_pathway();

  const GeneratorConfig& config() const noexcept { return config_; }
  const ImageEncoder& encoder() const noexcept { return *encoder_; }
  nn::ParameterStore& parameters() noexcept { return params_; }
  const nn::ParameterStore& parameters() const noexcept { return params_; }

 private:
  struct TunerLayer {
    int layer;
    nn::Linear from_z;
    nn::Linear from_c;
    nn::Linear out;
  };
  struct Stage2 {
    std::int64_t size;  // output side length
    nn::Conv2d conv;
    nn::Conv2d residual;
  };

  Var check_inputs(const Var& z, const Var& c) const;

  GeneratorConfig config_;
  std::shared_ptr<const ImageEncoder> encoder_;
  nn::ParameterStore params_{"generator"};
  nn::Linear dec1_z_, dec1_c_, dec1_hidden_, dec1_out_;
  std::vector<TunerLayer> tuner_;
  nn::Linear proj_feat1_, proj_feat2_;
  std::vector<Stage2> stages_;
  nn::Conv2d to_rgb_;
};

}  // namespace scad
