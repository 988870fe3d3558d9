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
#include <functional>
#include <string>
#include <string_view>

#include "scad/discriminator.hpp"
#include "scad/generator.hpp"

namespace scad {

enum class Preset { scad, scad_mi, scad_dd };

std::string to_string(Preset p);
/// Accepts "scad", "scad-mi", "scad-dd" (case-insensitive, '_' or '-').
Preset preset_from_string(std::string_view s);

/// Which heads a preset allocates and its MI weight.
struct PresetFlags {
  bool fidelity_branch = false;
  bool noise_predictor = false;
  double lambda = 0.0;
};
PresetFlags preset_flags(Preset p);

/// Sign used for the discriminator scores in the generator objective.
enum class GeneratorSign {
  non_saturating,  // minimise -D(fake): fakes pushed towards the real side
  literal,         // minimise +D(fake): the min-max sign taken at face value
};

/// Discriminator training objective.
enum class DiscriminatorObjective {
  san,          // hinge on h, Wasserstein on omega, via stop-gradients
  plain_hinge,  // hinge on the whole score, no split (baseline)
};

struct LossConfig {
  double k1 = 0.5;
  double k2 = 0.1;
  double l1 = 6.0;
  double l2 = 1.0;
  double mu = 4.0;
  double lambda = 0.0;
  double mismatch_weight = 0.5;
  bool mi_on_generator = true;
  GeneratorSign generator_sign = GeneratorSign::non_saturating;
  DiscriminatorObjective objective = DiscriminatorObjective::san;
  /// Lets SCAD-MI also train a fidelity branch. Unsupported territory.
  bool experimental_mi_dd = false;
  /// Added under the norm powers so gradients at g = 0 stay finite.
  double gp_eps = 1e-20;
};

/// One step's worth of inputs. Rows of c_matched pair with real_images and
/// fake_images; c_mismatched is a derangement of c_matched.
struct PairedBatch {
  Var real_images;   // [B, S*S*3]
  Var c_matched;     // [B, D_c]
  Var c_mismatched;  // [B, D_c]
  Var fake_images;   // [B, S*S*3]
  Var z;             // [B, D_z]
  std::int64_t size() const { return real_images.rows(); }
};

/// Logged loss terms of one step.
struct TermRecord {
  std::int64_t step = 0;
  double V_hinge_c = 0, V_wass_c = 0, GP_c = 0;
  double V_hinge = 0, V_wass = 0, GP = 0;
  double L_MI = 0, CS = 0, G_loss = 0, D_loss = 0;

  static const char* csv_header();
  std::string csv_row() const;
};

// Real and fake halves of the SAN terms; scores are any-shape, averaged.
Var hinge_real_term(const Var& real_scores);
Var hinge_fake_term(const Var& fake_scores);
Var wass_real_term(const Var& real_scores);
Var wass_fake_term(const Var& fake_scores);

/// mean min(0, -1 + real) + mean min(0, -1 - fake); <= 0.
Var san_hinge(const Var& real_scores, const Var& fake_scores);
/// mean(real) - mean(fake).
Var san_wass(const Var& real_scores, const Var& fake_scores);

struct SanTerm {
  Var (*real)(const Var&);
  Var (*fake)(const Var&);
};
inline constexpr SanTerm kHingeTerm{hinge_real_term, hinge_fake_term};
inline constexpr SanTerm kWassTerm{wass_real_term, wass_fake_term};

/// real(real) + ((1 - w) fake(fake) + w fake(mismatch)). Needs >= 2 real rows.
Var augment_mismatch(SanTerm term, const Var& real_scores, const Var& fake_scores,
                     const Var& mismatch_scores, double mismatch_weight = 0.5);

/// Per-sample scores [B, 1] from encoder features [B*L, D_tok] and c [B, D_c].
using ConditionalScore = std::function<Var(const FeatureGrid& features, const Var& c)>;
using UnconditionalScore = std::function<Var(const FeatureGrid& features)>;

/// mean_b k1 (|dD/dCL|^2 + eps)^(l1/2) + k2 (|dD/dc|^2 + eps)^(l2/2), with
/// the gradients kept in the graph so the penalty itself can be trained.
Var gp_matching_aware(const ConditionalScore& score, const FeatureGrid& real, const Var& c,
                      const LossConfig& cfg);
/// As above without the c term.
Var gp_standard(const UnconditionalScore& score, const FeatureGrid& real, const LossConfig& cfg);

/// -mean((z - z_hat)^2): a fixed-variance Gaussian log-likelihood up to a constant.
Var mi_loss(const Var& z, const Var& z_pred);

/// Mean cosine similarity of image embeddings [B, D] and text [B or 1, D].
Var clip_guidance(const Var& image_embeddings, const Var& c);

/// Eq-style maximisation target for the discriminator, plus its terms.
struct ObjectiveValue {
  Var value;
  TermRecord terms;
};

/// Fakes are detached. `training` advances spectral-norm iterations once.
ObjectiveValue discriminator_objective(const Discriminator& d, const PairedBatch& batch,
                                       const LossConfig& cfg, Preset preset, bool training = true);

/// Minimisation target for the generator; regenerates fakes from batch.z.
/// The discriminator is evaluated in evaluation mode. `guidance` is the
/// encoder whose projection scores CLIP similarity.
ObjectiveValue generator_objective(const Generator& g, const Discriminator& d,
                                   const ImageEncoder& guidance, const PairedBatch& batch,
                                   const LossConfig& cfg, Preset preset);

}  // namespace scad
