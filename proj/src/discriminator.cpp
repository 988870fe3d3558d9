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

#include "scad/discriminator.hpp"

#include <cmath>

#include "scad/errors.hpp"
#include "scad/rng.hpp"

namespace scad {

namespace {
constexpr std::pair<DiscriminatorVariant, const char*> kVariantNames[] = {
    {DiscriminatorVariant::hx_w, "hx_w"},
    {DiscriminatorVariant::hxc_w, "hxc_w"},
    {DiscriminatorVariant::hxc_wc, "hxc_wc"},
    {DiscriminatorVariant::sn_hxc_sn_wc, "sn_hxc_sn_wc"},
    {DiscriminatorVariant::sn_hxc_wc, "sn_hxc_wc"},
};
}  // namespace

std::string to_string(DiscriminatorVariant v) {
  for (const auto& [variant, name] : kVariantNames)
    if (variant == v) return name;
  return "unknown";
}

DiscriminatorVariant discriminator_variant_from_string(std::string_view s) {
  for (const auto& [variant, name] : kVariantNames)
    if (s == name) return variant;
  throw ConfigurationError("unknown discriminator variant '" + std::string(s) + "'");
}

bool conditions_features(DiscriminatorVariant v) { return v != DiscriminatorVariant::hx_w; }

bool conditions_direction(DiscriminatorVariant v) {
  return v == DiscriminatorVariant::hxc_wc || v == DiscriminatorVariant::sn_hxc_sn_wc ||
         v == DiscriminatorVariant::sn_hxc_wc;
}

bool normalizes_features(DiscriminatorVariant v) {
  return v == DiscriminatorVariant::sn_hxc_sn_wc || v == DiscriminatorVariant::sn_hxc_wc;
}

bool normalizes_direction(DiscriminatorVariant v) {
  return v == DiscriminatorVariant::sn_hxc_sn_wc;
}

Var san_scores(const SanOutput& out, ScoreMode mode) {
  switch (mode) {
    case ScoreMode::hinge:
      return ad::row_dot(out.features, ad::detach(out.direction));
    case ScoreMode::wass:
      return ad::row_dot(ad::detach(out.features), out.direction);
    case ScoreMode::plain:
      break;
  }
  return ad::row_dot(out.features, out.direction);
}

Discriminator::Discriminator(DiscriminatorConfig config,
                             std::shared_ptr<const ImageEncoder> encoder)
    : config_(std::move(config)), encoder_(std::move(encoder)) {
  if (!encoder_) throw ConfigurationError("discriminator: no image encoder");
  if (config_.d_h <= 0 || config_.d_c <= 0 || config_.hidden <= 0 || config_.d_z <= 0 ||
      config_.direction_hidden <= 0)
    throw ConfigurationError("discriminator: sizes must be positive");
  const auto& es = encoder_->spec();
  Rng rng(derive_seed(config_.seed, "discriminator"));
  const auto v = config_.variant;
  const nn::LinearOptions h_opts{.spectral_norm = normalizes_features(v)};
  const nn::LinearOptions w_opts{.spectral_norm = normalizes_direction(v)};

  const std::int64_t token_in = es.d_tok + (conditions_features(v) ? config_.d_c : 0);
  sem_token_ = nn::Linear(params_, "semantic/h/token", token_in, config_.hidden, rng, h_opts);
  sem_out_ = nn::Linear(params_, "semantic/h/out", es.tokens * config_.hidden, config_.d_h, rng,
                        h_opts);
  if (conditions_direction(v)) {
    dir_hidden_ = nn::Linear(params_, "semantic/omega/hidden", config_.d_c,
                             config_.direction_hidden, rng, w_opts);
    dir_out_ = nn::Linear(params_, "semantic/omega/out", config_.direction_hidden, config_.d_h,
                          rng, w_opts);
  } else {
    sem_omega_ = params_.add("semantic/omega/global", rng.normal_tensor(1, config_.d_h));
  }

  if (config_.fidelity_branch) {
    const std::int64_t grid = es.grid();
    if (grid < 2) throw ConfigurationError("fidelity branch needs at least a 2x2 token grid");
    patch_grid_ = nn::conv_out_size(grid, 2, 1, 0);
    const nn::LinearOptions sn{.spectral_norm = true};
    fid_patch_ = nn::Conv2d(params_, "fidelity/h/patch", es.d_tok, config_.hidden, 2, 1, 0, rng, sn);
    fid_out_ = nn::Conv2d(params_, "fidelity/h/out", config_.hidden, config_.d_h, 1, 1, 0, rng, sn);
    fid_omega_ = params_.add("fidelity/omega/global", rng.normal_tensor(1, config_.d_h));
  }

  if (config_.noise_predictor) {
    const std::int64_t flat = es.tokens * es.d_tok;
    noise_hidden_ = nn::Linear(params_, "noise/hidden", flat, config_.direction_hidden, rng);
    noise_out_ = nn::Linear(params_, "noise/out", config_.direction_hidden, config_.d_z, rng);
    noise_skip_ = nn::Linear(params_, "noise/skip", flat, config_.d_z, rng, {.bias = false});
  }
}

FeatureGrid Discriminator::encode(const Var& images) const { return encoder_->encode_image(images); }

Var Discriminator::check_condition(const Var& c, std::int64_t batch) const {
  if (c.cols() != config_.d_c)
    throw InputError("discriminator: c must have " + std::to_string(config_.d_c) + " columns");
  if (c.rows() == batch) return c;
  if (c.rows() == 1) return nn::repeat_rows(c, batch);
  throw InputError("discriminator: c rows must be 1 or match the batch");
}

Var Discriminator::unit_rows(const Var& raw, const char* what) {
  const Tensor& t = raw.value();
  for (std::int64_t r = 0; r < t.rows(); ++r) {
    double norm = 0.0;
    for (std::int64_t j = 0; j < t.cols(); ++j) norm += t(r, j) * t(r, j);
    if (!(std::sqrt(norm) > nn::kNormEps))
      throw NumericError(std::string(what) + ": direction has zero norm at row " +
                         std::to_string(r));
  }
  return ad::l2_normalize_rows(raw, nn::kNormEps);
}

Var Discriminator::features(const FeatureGrid& cl, const Var& c_in, bool training) const {
  const auto& es = encoder_->spec();
  if (cl.d_tok != es.d_tok || cl.length != es.tokens || cl.tokens.rows() != cl.batch * cl.length)
    throw InputError("discriminator: encoder grid does not match the encoder configuration");
  Var tokens = cl.tokens;
  if (conditions_features(config_.variant)) {
    const Var c = check_condition(c_in, cl.batch);
    tokens = ad::concat_cols({tokens, nn::repeat_rows(c, cl.length)});
  }
  const Var hidden = ad::leaky_relu(sem_token_.forward(tokens, training), nn::kLeakySlope);
  return sem_out_.forward(ad::reshape(hidden, cl.batch, cl.length * config_.hidden), training);
}

Var Discriminator::direction(const Var& c_in, bool training) const {
  if (!conditions_direction(config_.variant)) {
    if (c_in.cols() != config_.d_c) throw InputError("discriminator: c width mismatch");
    return nn::repeat_rows(unit_rows(sem_omega_, "semantic direction"), c_in.rows());
  }
  const Var c = check_condition(c_in, c_in.rows());
  const Var h = ad::leaky_relu(dir_hidden_.forward(c, training), nn::kLeakySlope);
  return unit_rows(dir_out_.forward(h, training), "semantic direction");
}

SanOutput Discriminator::semantic(const FeatureGrid& cl, const Var& c, bool training) const {
  Var h = features(cl, c, training);
  Var w = direction(check_condition(c, cl.batch), training);
  return SanOutput{h, w};
}

Var Discriminator::semantic_score(const Var& images, const Var& c, ScoreMode mode,
                                  bool training) const {
  return san_scores(semantic(encode(images), c, training), mode);
}

SanOutput Discriminator::fidelity(const FeatureGrid& cl, bool training) const {
  if (!config_.fidelity_branch)
    throw ConfigurationError("fidelity branch is disabled for this preset");
  const auto g = encoder_->spec().grid();
  Var h = ad::leaky_relu(fid_patch_.forward(cl.tokens, cl.batch, g, g, training), nn::kLeakySlope);
  h = fid_out_.forward(h, cl.batch, patch_grid_, patch_grid_, training);
  Var w = nn::repeat_rows(unit_rows(fid_omega_, "fidelity direction"), h.rows());
  return SanOutput{h, w};
}

Var Discriminator::fidelity_scores(const Var& images, ScoreMode mode, bool training) const {
  const auto cl = encode(images);
  return ad::reshape(san_scores(fidelity(cl, training), mode), cl.batch, patch_count());
}

Var Discriminator::predict_noise(const FeatureGrid& cl) const {
  if (!config_.noise_predictor)
    throw ConfigurationError("noise predictor is only available under the SCAD-MI preset");
  const Var flat = ad::reshape(cl.tokens, cl.batch, cl.length * cl.d_tok);
  const Var h = ad::leaky_relu(noise_hidden_.forward(flat), nn::kLeakySlope);
  return ad::add(noise_out_.forward(h), noise_skip_.forward(flat));
}

std::vector<Var> Discriminator::parameters_under(std::string_view prefix) const {
  std::vector<Var> out;
  for (const auto& [name, var] : params_.parameters())
    if (name.starts_with(prefix)) out.push_back(var);
  return out;
}

}  // namespace scad
