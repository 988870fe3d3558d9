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

#include "scad/generator.hpp"

#include <algorithm>

#include "scad/errors.hpp"
#include "scad/rng.hpp"

namespace scad {

void GeneratorConfig::validate(const EncoderSpec& encoder) const {
  if (image_size != 32 && image_size != 64 && image_size != 224 && image_size != 256)
    throw ConfigurationError("generator.image_size must be one of 32, 64, 224, 256");
  if (image_size != encoder.image_size)
    throw ConfigurationError("generator.image_size differs from encoder.image_size");
  const int ratio = image_size / encoder.grid();
  if (ratio < 1 || (ratio & (ratio - 1)) != 0)
    throw ConfigurationError("generator: image_size / token grid must be a power of two");
  if (d_z <= 0 || d_c <= 0 || hidden <= 0 || width < 2 || injection_tokens <= 0)
    throw ConfigurationError("generator: sizes must be positive");
}

Generator::Generator(GeneratorConfig config, std::shared_ptr<const ImageEncoder> encoder)
    : config_(std::move(config)), encoder_(std::move(encoder)) {
  if (!encoder_) throw ConfigurationError("generator: no image encoder");
  const auto& es = encoder_->spec();
  config_.validate(es);
  Rng rng(derive_seed(config_.seed, "generator"));
  const std::int64_t h = config_.hidden;
  const std::int64_t d = es.d_tok;
  const nn::LinearOptions no_bias{.bias = false};

  dec1_z_ = nn::Linear(params_, "dec1/z", config_.d_z, h, rng, no_bias);
  dec1_c_ = nn::Linear(params_, "dec1/c", config_.d_c, h, rng);
  dec1_hidden_ = nn::Linear(params_, "dec1/hidden", h, h, rng);
  dec1_out_ = nn::Linear(params_, "dec1/out", h, es.tokens * d, rng);

  for (int layer : es.injection_layers) {
    const std::string p = "prompt_tuner/layer" + std::to_string(layer);
    tuner_.push_back(TunerLayer{layer, nn::Linear(params_, p + "/z", config_.d_z, h, rng, no_bias),
                                nn::Linear(params_, p + "/c", config_.d_c, h, rng),
                                nn::Linear(params_, p + "/out", h, config_.injection_tokens * d,
                                           rng)});
  }

  const std::int64_t half = config_.width / 2;
  proj_feat1_ = nn::Linear(params_, "dec2/feat1", d, half, rng);
  proj_feat2_ = nn::Linear(params_, "dec2/feat2", d, half, rng);
  std::int64_t size = es.grid();
  std::int64_t channels = 2 * half;
  for (int i = 0; size < config_.image_size; ++i) {
    const std::int64_t next = std::max<std::int64_t>(8, channels / 2);
    size *= 2;
    const std::string p = "dec2/stage" + std::to_string(i);
    stages_.push_back(Stage2{size, nn::Conv2d(params_, p + "/conv", channels, next, 3, 1, 1, rng),
                             nn::Conv2d(params_, p + "/residual", next, next, 3, 1, 1, rng,
                                        {.gain = 0.5})});
    channels = next;
  }
  to_rgb_ = nn::Conv2d(params_, "dec2/to_rgb", channels, 3, 1, 1, 0, rng);
}

Var Generator::check_inputs(const Var& z, const Var& c) const {
  if (z.cols() != config_.d_z || z.rows() < 1)
    throw InputError("generator: z must be [B, " + std::to_string(config_.d_z) + "], got " +
                     z.value().shape_string());
  if (c.cols() != config_.d_c)
    throw InputError("generator: c must have " + std::to_string(config_.d_c) + " columns, got " +
                     c.value().shape_string());
  if (c.rows() == z.rows()) return c;
  if (c.rows() == 1) return nn::repeat_rows(c, z.rows());
  throw InputError("generator: c rows must be 1 or match the batch");
}

FeatureGrid Generator::bridge_predict(const Var& z, const Var& c_in) const {
  const Var c = check_inputs(z, c_in);
  const auto& es = encoder_->spec();
  const auto batch = z.rows();
  Var h = ad::leaky_relu(ad::add(dec1_z_.forward(z), dec1_c_.forward(c)), nn::kLeakySlope);
  h = ad::leaky_relu(dec1_hidden_.forward(h), nn::kLeakySlope);
  Var tokens = ad::reshape(dec1_out_.forward(h), batch * es.tokens, es.d_tok);
  tokens = config_.positive_feature_restriction ? ad::relu(tokens) : ad::layer_norm_rows(tokens);
  return FeatureGrid{tokens, Stage::input, batch, es.tokens, es.d_tok};
}

Injections Generator::prompt_tune(const Var& z, const Var& c_in) const {
  const Var c = check_inputs(z, c_in);
  const auto batch = z.rows();
  const auto d = encoder_->spec().d_tok;
  Injections out;
  for (const auto& t : tuner_) {
    const Var h = ad::leaky_relu(ad::add(t.from_z.forward(z), t.from_c.forward(c)), nn::kLeakySlope);
    const Var tokens = ad::reshape(t.out.forward(h), batch * config_.injection_tokens, d);
    out.emplace(t.layer, FeatureGrid{tokens, Stage::middle, batch, config_.injection_tokens, d});
  }
  return out;
}

Var Generator::decode(const FeatureGrid& feat1, const FeatureGrid& feat2) const {
  const auto batch = feat1.batch;
  Var x = ad::concat_cols({proj_feat1_.forward(feat1.tokens), proj_feat2_.forward(feat2.tokens)});
  std::int64_t size = encoder_->spec().grid();
  for (const auto& s : stages_) {
    x = nn::upsample2x(x, batch, size, size);
    size = s.size;
    x = ad::leaky_relu(s.conv.forward(x, batch, size, size), nn::kLeakySlope);
    x = ad::add(x, ad::leaky_relu(s.residual.forward(x, batch, size, size), nn::kLeakySlope));
  }
  x = ad::tanh(to_rgb_.forward(x, batch, size, size));
  return ad::reshape(x, batch, size * size * 3);
}

GeneratorOutput Generator::forward(const Var& z, const Var& c) const {
  FeatureGrid feat1 = bridge_predict(z, c);
  FeatureGrid feat2 = encoder_->encode_from_features(feat1, prompt_tune(z, c));
  Var images = decode(feat1, feat2);
  return GeneratorOutput{images, std::move(feat1), std::move(feat2)};
}

std::vector<Tensor> Generator::interpolate(const Tensor& z0, const Tensor& z1, int steps,
                                           const Tensor& c) const {
  if (steps < 2) throw InputError("interpolate: steps must be at least 2");
  if (z0.rows() != 1 || !z0.same_shape(z1))
    throw InputError("interpolate: z0 and z1 must be single rows of equal width");
  Tensor zs(steps, z0.cols());
  for (int s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / (steps - 1);
    // Written as z0 + t (z1 - z0) so equal endpoints give bit-identical frames.
    for (std::int64_t j = 0; j < z0.cols(); ++j)
      zs(s, j) = s + 1 == steps ? z1[j] : z0[j] + t * (z1[j] - z0[j]);
  }
  ad::NoGradGuard guard;
  const Tensor images = generate(Var::constant(zs), Var::constant(c)).value();
  std::vector<Tensor> frames;
  for (int s = 0; s < steps; ++s) frames.push_back(images.row_at(s));
  return frames;
}

void Generator::zero_prompt_noise_pathway() {
  for (auto& t : tuner_) {
    Var w = t.from_z.weight();
    for (auto& v : w.mutable_value().data()) v = 0.0;
  }
}

}  // namespace scad
