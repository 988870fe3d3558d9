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

#include "scad/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "scad/archive.hpp"
#include "scad/errors.hpp"
#include "scad/rng.hpp"

namespace scad {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::stub ? "stub" : "external"; }

EncoderKind encoder_kind_from_string(std::string_view s) {
  if (s == "stub") return EncoderKind::stub;
  if (s == "external") return EncoderKind::external;
  throw ConfigurationError("unknown encoder kind '" + std::string(s) + "' (stub|external)");
}

int EncoderSpec::grid() const {
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(tokens))));
  return g;
}

void EncoderSpec::validate() const {
  const int g = grid();
  if (tokens <= 0 || g * g != tokens)
    throw ConfigurationError("encoder.tokens must be a positive square number");
  if (image_size <= 0 || image_size % g != 0)
    throw ConfigurationError("encoder: image_size must be divisible by sqrt(tokens)");
  if (d_tok <= 0 || d_embed <= 0 || n_layers <= 0)
    throw ConfigurationError("encoder: widths and layer count must be positive");
  for (int k : injection_layers)
    if (k < 0 || k >= n_layers)
      throw ConfigurationError("encoder: injection layer " + std::to_string(k) +
                               " outside [0, n_layers)");
}

namespace {

// Frozen weights of an external adapter replace the seeded ones by name.
void load_frozen(nn::ParameterStore& store, const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw AdapterError(std::string(what) + ": external adapter needs a weights path");
  if (!std::filesystem::exists(path))
    throw AdapterError(std::string(what) + ": weights not found at " + path.string());
  Archive archive;
  try {
    archive = read_archive(path);
  } catch (const Error& e) {
    throw AdapterError(std::string(what) + ": cannot load " + path.string() + ": " + e.what());
  }
  for (const auto& [name, var] : store.parameters()) {
    auto it = archive.tensors.find(name);
    if (it == archive.tensors.end() || !it->second.same_shape(var.value()))
      throw AdapterError(std::string(what) + ": " + path.string() + " lacks a compatible '" +
                         name + "' tensor");
    Var v = var;
    v.mutable_value() = it->second;
  }
}

void save_frozen(const nn::ParameterStore& store, const std::filesystem::path& path) {
  Archive archive;
  archive.meta["kind"] = store.name_space();
  for (const auto& [name, var] : store.parameters()) archive.tensors.emplace(name, var.value());
  write_archive(archive, path);
}

}  // namespace

ImageEncoder::ImageEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(derive_seed(spec_.seed, "image_encoder"));
  const nn::LinearOptions frozen{.bias = true, .spectral_norm = false, .gain = 1.0, .trainable = false};
  const int p = spec_.patch();
  const std::int64_t d = spec_.d_tok;
  const std::int64_t hidden = 2 * d;
  patch_embed_ = nn::Linear(weights_, "patch_embed", p * p * 3, d, rng, frozen);
  positions_ = weights_.add("positions", rng.normal_tensor(spec_.tokens, d, 0.1), false);
  for (int i = 0; i < spec_.n_layers; ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    auto ctx_opts = frozen;
    ctx_opts.bias = false;
    auto out_opts = frozen;
    out_opts.gain = 0.5;
    layers_.push_back(Layer{nn::Linear(weights_, prefix + "/token_in", d, hidden, rng, frozen),
                            nn::Linear(weights_, prefix + "/context_in", d, hidden, rng, ctx_opts),
                            nn::Linear(weights_, prefix + "/out", hidden, d, rng, out_opts)});
  }
  projection_ = nn::Linear(weights_, "projection", d, spec_.d_embed, rng, frozen);
  if (spec_.kind == EncoderKind::external) load_frozen(weights_, spec_.path, "image encoder");
}

void ImageEncoder::check_image_batch(const Var& images) const {
  const std::int64_t pixels = static_cast<std::int64_t>(spec_.image_size) * spec_.image_size * 3;
  if (images.cols() != pixels || images.rows() < 1) {
    throw InputError("image encoder: expected [B, " + std::to_string(pixels) + "] images, got " +
                     images.value().shape_string());
  }
}

void ImageEncoder::check_grid(const FeatureGrid& grid, const char* what) const {
  if (grid.d_tok != spec_.d_tok || grid.tokens.cols() != spec_.d_tok)
    throw InputError(std::string(what) + ": token width " + std::to_string(grid.d_tok) +
                     " does not match encoder d_tok " + std::to_string(spec_.d_tok));
  if (grid.tokens.rows() != grid.batch * grid.length)
    throw InputError(std::string(what) + ": token rows do not equal batch * length");
}

FeatureGrid ImageEncoder::embed_patches(const Var& images) const {
  check_image_batch(images);
  const auto batch = images.rows();
  const int p = spec_.patch();
  auto map = nn::patchify_map(batch, spec_.image_size, 3, p);
  const Var patches = ad::gather(images, map, batch * spec_.tokens, p * p * 3);
  const Var tokens = ad::add(patch_embed_.forward(patches), nn::tile_rows(positions_, batch));
  return FeatureGrid{tokens, Stage::input, batch, spec_.tokens, spec_.d_tok};
}

Var ImageEncoder::run_layer(const Layer& layer, const Var& x, std::int64_t batch,
                            std::int64_t length) const {
  (void)batch;
  const Var context = layer.context_in.forward(nn::segment_mean(x, length));
  const Var mixed = ad::tanh(ad::add(layer.token_in.forward(x), nn::repeat_rows(context, length)));
  return ad::add(x, layer.out.forward(mixed));
}

std::vector<FeatureGrid> ImageEncoder::trace(const FeatureGrid& feat1,
                                             const Injections& injections) const {
  if (feat1.stage != Stage::input)
    throw InputError("encode_from_features: feat1 must be an input-stage grid");
  check_grid(feat1, "encode_from_features");
  if (feat1.length != spec_.tokens)
    throw InputError("encode_from_features: expected " + std::to_string(spec_.tokens) + " tokens");
  for (const auto& [layer, grid] : injections) {
    if (std::find(spec_.injection_layers.begin(), spec_.injection_layers.end(), layer) ==
        spec_.injection_layers.end())
      throw InputError("injection at layer " + std::to_string(layer) +
                       " is not an allowed injection layer");
    check_grid(grid, "injection");
    if (grid.batch != feat1.batch) throw InputError("injection: batch size differs from feat1");
  }

  const auto batch = feat1.batch;
  const auto length = feat1.length;
  const auto d = spec_.d_tok;
  std::vector<FeatureGrid> outputs;
  Var x = feat1.tokens;
  for (int i = 0; i < spec_.n_layers; ++i) {
    auto inj = injections.find(i);
    if (inj == injections.end()) {
      x = run_layer(layers_[i], x, batch, length);
    } else {
      // Extra tokens join the sequence for this layer only.
      const auto extra = inj->second.length;
      const Var joined = ad::reshape(
          ad::concat_cols({ad::reshape(x, batch, length * d),
                           ad::reshape(inj->second.tokens, batch, extra * d)}),
          batch * (length + extra), d);
      const Var y = run_layer(layers_[i], joined, batch, length + extra);
      x = ad::reshape(ad::slice_cols(ad::reshape(y, batch, (length + extra) * d), 0, length * d),
                      batch * length, d);
    }
    const Stage stage = i + 1 == spec_.n_layers ? Stage::output : Stage::middle;
    outputs.push_back(FeatureGrid{x, stage, batch, length, d});
  }
  return outputs;
}

FeatureGrid ImageEncoder::encode_from_features(const FeatureGrid& feat1,
                                               const Injections& injections) const {
  return trace(feat1, injections).back();
}

FeatureGrid ImageEncoder::encode_image(const Var& images, const Injections& injections) const {
  return encode_from_features(embed_patches(images), injections);
}

Var ImageEncoder::project(const FeatureGrid& grid) const {
  check_grid(grid, "project");
  const Var pooled = ad::layer_norm_rows(nn::segment_mean(grid.tokens, grid.length));
  return projection_.forward(pooled);
}

void ImageEncoder::save_weights(const std::filesystem::path& path) const {
  save_frozen(weights_, path);
}

std::vector<std::string> tokenize_caption(std::string_view caption) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    // Trim punctuation at both ends of a word.
    std::size_t b = 0, e = current.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(current[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(current[e - 1]))) --e;
    if (e > b) words.push_back(current.substr(b, e - b));
    current.clear();
  };
  for (char ch : caption) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  flush();
  return words;
}

TextEncoder::TextEncoder(TextEncoderSpec spec) : spec_(std::move(spec)) {
  if (spec_.d_c <= 0) throw ConfigurationError("text encoder: d_c must be positive");
  Rng rng(derive_seed(spec_.seed, "text_mix"));
  mix_ = rng.normal_tensor(spec_.d_c, spec_.d_c, 1.0 / std::sqrt(static_cast<double>(spec_.d_c)));
  if (spec_.kind == EncoderKind::external) {
    nn::ParameterStore store("text_encoder");
    Var mix = store.add("mix", mix_, false);
    load_frozen(store, spec_.path, "text encoder");
    mix_ = mix.value();
  }
}

Tensor TextEncoder::word_vector(std::string_view word) const {
  Rng rng(derive_seed(spec_.seed, std::string("word:") + std::string(word)));
  return rng.normal_tensor(1, spec_.d_c);
}

TextEmbedding TextEncoder::embed_text(std::string_view caption) const {
  const auto words = tokenize_caption(caption);
  if (words.empty()) throw InputError("embed_text: caption is empty");
  Tensor bag(1, spec_.d_c);
  for (const auto& w : words) {
    const Tensor v = word_vector(w);
    for (std::int64_t i = 0; i < bag.size(); ++i) bag[i] += v[i];
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(words.size()));
  for (auto& v : bag.data()) v *= inv;
  Tensor mixed(1, spec_.d_c);
  kernels::matmul(bag, false, mix_, false, mixed);
  double norm = 0.0;
  for (auto& v : mixed.data()) {
    v = std::tanh(v);
    norm += v * v;
  }
  norm = std::max(std::sqrt(norm), nn::kNormEps);
  for (auto& v : mixed.data()) v /= norm;
  return TextEmbedding{std::move(mixed)};
}

Tensor TextEncoder::embed_batch(std::span<const std::string> captions) const {
  std::vector<Tensor> rows;
  rows.reserve(captions.size());
  for (const auto& c : captions) rows.push_back(embed_text(c).values);
  return vstack(rows);
}

std::uint64_t TextEncoder::checksum() const {
  const auto* bytes = reinterpret_cast<const char*>(mix_.data().data());
  return fnv1a(std::string_view(bytes, mix_.data().size_bytes()),
               fnv1a(std::to_string(spec_.seed)));
}

void TextEncoder::save_weights(const std::filesystem::path& path) const {
  nn::ParameterStore store("text_encoder");
  store.add("mix", mix_, false);
  save_frozen(store, path);
}

DiversityEmbedder::DiversityEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  const std::int64_t pixels = static_cast<std::int64_t>(spec_.image_size) * spec_.image_size * 3;
  if (spec_.kind == EncoderKind::stub) {
    if (spec_.d_s <= 0) throw ConfigurationError("embedder: d_s must be positive");
    Rng rng(derive_seed(spec_.seed, "diversity_embedder"));
    projection_ = rng.normal_tensor(pixels, spec_.d_s, 1.0 / std::sqrt(static_cast<double>(spec_.d_s)));
    return;
  }
  if (spec_.path.empty() || !std::filesystem::exists(spec_.path))
    throw AdapterError("diversity embedder: weights not found at '" + spec_.path.string() + "'");
  Archive archive;
  try {
    archive = read_archive(spec_.path);
  } catch (const Error& e) {
    throw AdapterError(std::string("diversity embedder: ") + e.what());
  }
  auto it = archive.tensors.find("projection");
  if (it == archive.tensors.end() || it->second.rows() != pixels)
    throw AdapterError("diversity embedder: " + spec_.path.string() +
                       " has no projection for this image size");
  projection_ = it->second;
}

Tensor DiversityEmbedder::embed(const Tensor& images) const {
  if (images.rows() < 1) throw InputError("embed_for_diversity: empty batch");
  if (images.cols() != projection_.rows())
    throw InputError("embed_for_diversity: image size does not match the embedder");
  Tensor out(images.rows(), projection_.cols());
  kernels::matmul(images, false, projection_, false, out);
  return out;
}

std::string DiversityEmbedder::label() const {
  return is_stub() ? "stub" : "external:" + spec_.path.string();
}

std::uint64_t DiversityEmbedder::checksum() const {
  const auto* bytes = reinterpret_cast<const char*>(projection_.data().data());
  return fnv1a(std::string_view(bytes, projection_.data().size_bytes()));
}

void DiversityEmbedder::save_weights(const std::filesystem::path& path) const {
  Archive archive;
  archive.meta["kind"] = "diversity_embedder";
  archive.tensors.emplace("projection", projection_);
  write_archive(archive, path);
}

}  // namespace scad
