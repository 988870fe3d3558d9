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

#include "scad/config.hpp"

#include <fstream>
#include <set>

#include "scad/errors.hpp"

namespace scad {

namespace {

using nlohmann::json;

std::string enum_name(GeneratorSign s) {
  return s == GeneratorSign::non_saturating ? "non_saturating" : "literal";
}

GeneratorSign generator_sign_from(const std::string& s) {
  if (s == "non_saturating") return GeneratorSign::non_saturating;
  if (s == "literal") return GeneratorSign::literal;
  throw ConfigurationError("loss.generator_sign must be non_saturating or literal");
}

std::string enum_name(DiscriminatorObjective o) {
  return o == DiscriminatorObjective::san ? "san" : "plain_hinge";
}

DiscriminatorObjective objective_from(const std::string& s) {
  if (s == "san") return DiscriminatorObjective::san;
  if (s == "plain_hinge") return DiscriminatorObjective::plain_hinge;
  throw ConfigurationError("loss.objective must be san or plain_hinge");
}

json adam_json(const nn::AdamOptions& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

// Reads known keys from an object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigurationError("config: '" + where_ + "' must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key))
        throw ConfigurationError("config: unknown key '" + prefix() + key + "'");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigurationError("config: bad value for '" + prefix() + key + "': " + e.what());
    }
  }
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string prefix() const { return where_.empty() ? "" : where_ + "."; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_adam(const json* j, const std::string& where, nn::AdamOptions& a) {
  if (!j) return;
  Reader r(*j, where);
  r.get("lr", a.lr);
  r.get("beta1", a.beta1);
  r.get("beta2", a.beta2);
  r.get("eps", a.eps);
}

}  // namespace

void TrainConfig::resolve() {
  if (batch_size < 2) throw ConfigurationError("batch_size must be at least 2 (mismatch pairs)");
  if (epochs < 0 || steps_per_epoch < 0) throw ConfigurationError("epochs/steps must be >= 0");

  generator.image_size = image_size;
  encoder.image_size = image_size;
  embedder.image_size = image_size;
  text_encoder.d_c = generator.d_c;
  discriminator.d_c = generator.d_c;
  discriminator.d_z = generator.d_z;
  encoder.d_embed = generator.d_c;
  generator.seed = derive_seed(seed, "generator");
  discriminator.seed = derive_seed(seed, "discriminator");

  if (preset == Preset::scad_mi && discriminator.fidelity_branch && !allow_experimental_mi_dd)
    throw ConfigurationError(
        "scad-mi with a fidelity branch is disabled; pass --allow-experimental-mi-dd to enable it");
  const auto flags = preset_flags(preset);
  loss.lambda = flags.lambda;
  discriminator.noise_predictor = flags.noise_predictor;
  discriminator.fidelity_branch = flags.fidelity_branch;
  loss.experimental_mi_dd = false;
  if (allow_experimental_mi_dd) {
    if (preset != Preset::scad_mi)
      throw ConfigurationError("--allow-experimental-mi-dd only applies to the scad-mi preset");
    discriminator.fidelity_branch = true;
    loss.experimental_mi_dd = true;
  }
  encoder.validate();
  generator.validate(encoder);
}

json to_json(const TrainConfig& c) {
  json j;
  j["preset"] = to_string(c.preset);
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["steps_per_epoch"] = c.steps_per_epoch;
  j["adam_g"] = adam_json(c.adam_g);
  j["adam_d"] = adam_json(c.adam_d);
  j["dataset"] = c.dataset.string();
  j["image_size"] = c.image_size;
  j["seed"] = c.seed;
  j["allow_experimental_mi_dd"] = c.allow_experimental_mi_dd;
  const auto& l = c.loss;
  j["loss"] = {{"k1", l.k1},
               {"k2", l.k2},
               {"l1", l.l1},
               {"l2", l.l2},
               {"mu", l.mu},
               {"lambda", l.lambda},
               {"mismatch_weight", l.mismatch_weight},
               {"mi_on_generator", l.mi_on_generator},
               {"generator_sign", enum_name(l.generator_sign)},
               {"objective", enum_name(l.objective)},
               {"gp_eps", l.gp_eps}};
  const auto& g = c.generator;
  j["generator"] = {{"d_z", g.d_z},
                    {"d_c", g.d_c},
                    {"positive_feature_restriction", g.positive_feature_restriction},
                    {"hidden", g.hidden},
                    {"width", g.width},
                    {"injection_tokens", g.injection_tokens}};
  const auto& e = c.encoder;
  j["encoder"] = {{"kind", to_string(e.kind)},         {"d_tok", e.d_tok},
                  {"tokens", e.tokens},                {"n_layers", e.n_layers},
                  {"injection_layers", e.injection_layers}, {"seed", e.seed},
                  {"path", e.path.string()}};
  j["text_encoder"] = {{"kind", to_string(c.text_encoder.kind)},
                       {"seed", c.text_encoder.seed},
                       {"path", c.text_encoder.path.string()}};
  j["embedder"] = {{"kind", to_string(c.embedder.kind)},
                   {"d_s", c.embedder.d_s},
                   {"seed", c.embedder.seed},
                   {"path", c.embedder.path.string()}};
  const auto& d = c.discriminator;
  j["discriminator"] = {{"variant", to_string(d.variant)},
                        {"d_h", d.d_h},
                        {"hidden", d.hidden},
                        {"direction_hidden", d.direction_hidden}};
  j["output"] = {{"dir", c.output.dir.string()},
                 {"checkpoint_every", c.output.checkpoint_every},
                 {"sample_every", c.output.sample_every},
                 {"sample_prompts", c.output.sample_prompts}};
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  Reader top(j, "");
  std::string preset = to_string(c.preset), dataset = c.dataset.string();
  top.get("preset", preset);
  c.preset = preset_from_string(preset);
  top.get("batch_size", c.batch_size);
  top.get("epochs", c.epochs);
  top.get("steps_per_epoch", c.steps_per_epoch);
  read_adam(top.child("adam_g"), "adam_g", c.adam_g);
  read_adam(top.child("adam_d"), "adam_d", c.adam_d);
  top.get("dataset", dataset);
  c.dataset = dataset;
  top.get("image_size", c.image_size);
  top.get("seed", c.seed);
  top.get("allow_experimental_mi_dd", c.allow_experimental_mi_dd);

  if (const json* s = top.child("loss")) {
    Reader r(*s, "loss");
    auto& l = c.loss;
    std::string sign = enum_name(l.generator_sign), objective = enum_name(l.objective);
    r.get("k1", l.k1);
    r.get("k2", l.k2);
    r.get("l1", l.l1);
    r.get("l2", l.l2);
    r.get("mu", l.mu);
    r.get("lambda", l.lambda);
    r.get("mismatch_weight", l.mismatch_weight);
    r.get("mi_on_generator", l.mi_on_generator);
    r.get("generator_sign", sign);
    r.get("objective", objective);
    r.get("gp_eps", l.gp_eps);
    l.generator_sign = generator_sign_from(sign);
    l.objective = objective_from(objective);
  }
  if (const json* s = top.child("generator")) {
    Reader r(*s, "generator");
    auto& g = c.generator;
    r.get("d_z", g.d_z);
    r.get("d_c", g.d_c);
    r.get("positive_feature_restriction", g.positive_feature_restriction);
    r.get("hidden", g.hidden);
    r.get("width", g.width);
    r.get("injection_tokens", g.injection_tokens);
  }
  auto read_kind_path = [](Reader& r, EncoderKind& kind, std::filesystem::path& path) {
    std::string k = to_string(kind), p = path.string();
    r.get("kind", k);
    r.get("path", p);
    kind = encoder_kind_from_string(k);
    path = p;
  };
  if (const json* s = top.child("encoder")) {
    Reader r(*s, "encoder");
    auto& e = c.encoder;
    read_kind_path(r, e.kind, e.path);
    r.get("d_tok", e.d_tok);
    r.get("tokens", e.tokens);
    r.get("n_layers", e.n_layers);
    r.get("injection_layers", e.injection_layers);
    r.get("seed", e.seed);
  }
  if (const json* s = top.child("text_encoder")) {
    Reader r(*s, "text_encoder");
    read_kind_path(r, c.text_encoder.kind, c.text_encoder.path);
    r.get("seed", c.text_encoder.seed);
  }
  if (const json* s = top.child("embedder")) {
    Reader r(*s, "embedder");
    read_kind_path(r, c.embedder.kind, c.embedder.path);
    r.get("d_s", c.embedder.d_s);
    r.get("seed", c.embedder.seed);
  }
  if (const json* s = top.child("discriminator")) {
    Reader r(*s, "discriminator");
    auto& d = c.discriminator;
    std::string variant = to_string(d.variant);
    r.get("variant", variant);
    d.variant = discriminator_variant_from_string(variant);
    r.get("d_h", d.d_h);
    r.get("hidden", d.hidden);
    r.get("direction_hidden", d.direction_hidden);
  }
  if (const json* s = top.child("output")) {
    Reader r(*s, "output");
    std::string dir = c.output.dir.string();
    r.get("dir", dir);
    c.output.dir = dir;
    r.get("checkpoint_every", c.output.checkpoint_every);
    r.get("sample_every", c.output.sample_every);
    r.get("sample_prompts", c.output.sample_prompts);
  }
  return c;
}

void apply_override(json& tree, std::string_view dotted_key, std::string_view value) {
  if (dotted_key.empty()) throw ConfigurationError("override: empty key");
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part(dotted_key.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (part.empty()) throw ConfigurationError("override: bad key '" + std::string(dotted_key) + "'");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  *node = parsed.is_discarded() ? json(std::string(value)) : parsed;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace scad
