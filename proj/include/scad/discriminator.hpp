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
#include <string>
#include <string_view>
#include <vector>

#include "scad/encoders.hpp"
#include "scad/nn.hpp"

namespace scad {

/// Forms of the semantic branch h(.) . omega(.) and where spectral norm goes.
enum class DiscriminatorVariant {
  hx_w,          // h(x) . w
  hxc_w,         // h(x, c) . w
  hxc_wc,        // h(x, c) . w(c)
  sn_hxc_sn_wc,  // sn[h(x, c)] . sn[w(c)]
  sn_hxc_wc,     // sn[h(x, c)] . w(c)
};

std::string to_string(DiscriminatorVariant v);
DiscriminatorVariant discriminator_variant_from_string(std::string_view s);
bool conditions_features(DiscriminatorVariant v);
bool conditions_direction(DiscriminatorVariant v);
bool normalizes_features(DiscriminatorVariant v);
bool normalizes_direction(DiscriminatorVariant v);

/// hinge: direction under stop-gradient. wass: features under stop-gradient.
/// plain: no stop-gradient (non-SAN baseline).
enum class ScoreMode { hinge, wass, plain };

struct DiscriminatorConfig {
  DiscriminatorVariant variant = DiscriminatorVariant::sn_hxc_wc;
  int d_c = 64;
  int d_h = 128;
  int d_z = 100;
  /// Per-token channel width of the trainable heads.
  int hidden = 64;
  /// Hidden width of the direction MLP and the noise predictor.
  int direction_hidden = 64;
  bool fidelity_branch = false;
  bool noise_predictor = false;
  std::uint64_t seed = 0;
};

/// Features and unit directions of one branch for a batch.
struct SanOutput {
  Var features;   // [N, D_h]
  Var direction;  // [N, D_h], unit rows
};

/// Per-row scores under a stop-gradient mode: [N, 1].
Var san_scores(const SanOutput& out, ScoreMode mode);

/// Semantic branch, optional PatchGAN fidelity branch and optional noise
/// predictor, all reading features of the shared frozen image encoder.
///
/// `training` advances spectral-norm power iterations; compute a branch
/// once per step and derive both score modes from its SanOutput.
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig config, std::shared_ptr<const ImageEncoder> encoder);

  /// CL(x): encoder output grid for [B, S*S*3] images.
  FeatureGrid encode(const Var& images) const;

  Var features(const FeatureGrid& cl, const Var& c, bool training = false) const;
  /// [B, D_h] unit rows; unconditional variants repeat one learned vector.
  Var direction(const Var& c, bool training = false) const;
  SanOutput semantic(const FeatureGrid& cl, const Var& c, bool training = false) const;
  Var semantic_score(const Var& images, const Var& c, ScoreMode mode, bool training = false) const;

  /// Per-patch branch: features [B*P, D_h] with one shared direction.
  SanOutput fidelity(const FeatureGrid& cl, bool training = false) const;
  /// [B, P] patch scores.
  Var fidelity_scores(const Var& images, ScoreMode mode, bool training = false) const;
  std::int64_t patch_count() const noexcept { return patch_grid_ * patch_grid_; }

  /// z estimate [B, d_z]; ConfigurationError unless the head is enabled.
  Var predict_noise(const FeatureGrid& cl) const;
  Var predict_noise(const Var& images) const { return predict_noise(encode(images)); }

  const DiscriminatorConfig& config() const noexcept { return config_; }
  bool has_fidelity() const noexcept { return config_.fidelity_branch; }
  bool has_noise_predictor() const noexcept { return config_.noise_predictor; }
  const ImageEncoder& encoder() const noexcept { return *encoder_; }
  nn::ParameterStore& parameters() noexcept { return params_; }
  const nn::ParameterStore& parameters() const noexcept { return params_; }
  /// Parameters whose names start with `prefix` ("semantic/h/", ...).
  std::vector<Var> parameters_under(std::string_view prefix) const;

 private:
  Var check_condition(const Var& c, std::int64_t batch) const;
  static Var unit_rows(const Var& raw, const char* what);

  DiscriminatorConfig config_;
  std::shared_ptr<const ImageEncoder> encoder_;
  nn::ParameterStore params_{"discriminator"};
  nn::Linear sem_token_, sem_out_;
  nn::Linear dir_hidden_, dir_out_;
  Var sem_omega_;
  nn::Conv2d fid_patch_, fid_out_;
  Var fid_omega_;
  std::int64_t patch_grid_ = 0;
  nn::Linear noise_hidden_, noise_out_, noise_skip_;
};

}  // namespace scad
