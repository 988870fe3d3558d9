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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scad/autodiff.hpp"
#include "scad/nn.hpp"
#include "scad/tensor.hpp"

// Frozen encoders: the image encoder shared by the generator and the
// discriminators, the text encoder producing conditioning embeddings, and
// the image embedder used for diversity measurement.
//
// Each comes as a deterministic seeded stub or as an "external" adapter
// that loads the same architecture's weights from an archive on disk. All
// of them are immutable after construction and safe to share across threads.
namespace scad {

using ad::Var;

enum class EncoderKind { stub, external };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(std::string_view s);

enum class Stage { input, middle, output };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::stub;
  int image_size = 32;
  int d_tok = 32;
  /// Token count L; must be a square number whose root divides image_size.
  int tokens = 16;
  int n_layers = 4;
  std::vector<int> injection_layers{1, 3};
  /// Width of the final projection into the joint image-text space.
  int d_embed = 64;
  std::uint64_t seed = 0;
  std::filesystem::path path;

  void validate() const;
  int grid() const;
  int patch() const { return image_size / grid(); }
};

/// Batched token grid: tokens is [batch * length, d_tok].
struct FeatureGrid {
  Var tokens;
  Stage stage = Stage::input;
  std::int64_t batch = 0;
  std::int64_t length = 0;
  std::int64_t d_tok = 0;
};

/// Prompt/noise tokens keyed by the encoder layer they are injected into.
using Injections = std::map<int, FeatureGrid>;

class ImageEncoder {
 public:
  /// Stub: weights drawn from spec.seed. External: weights read from
  /// spec.path; a missing or incompatible file raises AdapterError.
  explicit ImageEncoder(EncoderSpec spec);

  const EncoderSpec& spec() const noexcept { return spec_; }

  /// Input convolution: [B, S*S*3] images -> stage-input grid.
  FeatureGrid embed_patches(const Var& images) const;

  /// Full encoder without the final projection: patches then middle layers.
  FeatureGrid encode_image(const Var& images, const Injections& injections = {}) const;

  /// Middle layers only, starting from an input-stage grid.
  FeatureGrid encode_from_features(const FeatureGrid& feat1,
                                   const Injections& injections = {}) const;

  /// Output of every middle layer (stage middle, last one stage output).
  std::vector<FeatureGrid> trace(const FeatureGrid& feat1, const Injections& injections = {}) const;

  /// Final projection: token mean -> layer norm -> linear, [B, d_embed].
  Var project(const FeatureGrid& grid) const;

  std::uint64_t checksum() const { return weights_.checksum(); }
  const nn::ParameterStore& weights() const noexcept { return weights_; }

  /// Writes the weights in the archive format the external adapter loads.
  void save_weights(const std::filesystem::path& path) const;

 private:
  struct Layer {
    nn::Linear token_in;
    nn::Linear context_in;
    nn::Linear out;
  };

  void check_image_batch(const Var& images) const;
  void check_grid(const FeatureGrid& grid, const char* what) const;
  Var run_layer(const Layer& layer, const Var& x, std::int64_t batch, std::int64_t length) const;

  EncoderSpec spec_;
  nn::ParameterStore weights_{"image_encoder"};
  nn::Linear patch_embed_;
  Var positions_;
  std::vector<Layer> layers_;
  nn::Linear projection_;
};

/// Conditioning vector c.
struct TextEmbedding {
  Tensor values;  // [1, D_c]
  std::int64_t dim() const { return values.cols(); }
};

struct TextEncoderSpec {
  EncoderKind kind = EncoderKind::stub;
  int d_c = 64;
  std::uint64_t seed = 0;
  std::filesystem::path path;
};

/// Lower-cased whitespace tokens of a caption.
std::vector<std::string> tokenize_caption(std::string_view caption);

class TextEncoder {
 public:
  explicit TextEncoder(TextEncoderSpec spec);

  /// Unit-norm caption embedding. Empty (after trimming) captions raise InputError.
  TextEmbedding embed_text(std::string_view caption) const;
  /// [N, D_c], one row per caption.
  Tensor embed_batch(std::span<const std::string> captions) const;

  const TextEncoderSpec& spec() const noexcept { return spec_; }
  std::uint64_t checksum() const;
  void save_weights(const std::filesystem::path& path) const;

 private:
  Tensor word_vector(std::string_view word) const;

  TextEncoderSpec spec_;
  Tensor mix_;  // [D_c, D_c]
};

struct EmbedderSpec {
  EncoderKind kind = EncoderKind::stub;
  int image_size = 32;
  /// Stub width; external embedders report their own (768 for the usual
  /// self-supervised ViT backbones).
  int d_s = 64;
  std::uint64_t seed = 0;
  std::filesystem::path path;
};

/// s(x) for the per-prompt diversity metric.
class DiversityEmbedder {
 public:
  explicit DiversityEmbedder(EmbedderSpec spec);

  /// images: [N, S*S*3] -> [N, D_s]. N = 0 raises InputError.
  Tensor embed(const Tensor& images) const;

  std::int64_t dim() const noexcept { return projection_.cols(); }
  bool is_stub() const noexcept { return spec_.kind == EncoderKind::stub; }
  /// "stub" or "external:<path>", echoed into reports.
  std::string label() const;
  std::uint64_t checksum() const;
  void save_weights(const std::filesystem::path& path) const;

 private:
  EmbedderSpec spec_;
  Tensor projection_;  // [S*S*3, D_s]
};

}  // namespace scad
