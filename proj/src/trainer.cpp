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

#include "scad/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "scad/errors.hpp"
#include "scad/image_io.hpp"

namespace scad {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr int kGridColumns = 8;

bool finite_terms(const TermRecord& r) {
  for (double v : {r.V_hinge_c, r.V_wass_c, r.GP_c, r.V_hinge, r.V_wass, r.GP, r.L_MI, r.CS,
                   r.G_loss, r.D_loss})
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const TermRecord& r, const char* phase) {
  if (finite_terms(r)) return;
  throw NumericError(std::string("non-finite loss in ") + phase + " step " +
                     std::to_string(r.step) + "\n" + TermRecord::csv_header() + "\n" + r.csv_row());
}

std::string step_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%08lld", static_cast<long long>(step));
  return buf;
}

void store_section(Archive& a, const std::string& prefix, const nn::ParameterStore& store) {
  for (const auto& [name, var] : store.parameters()) a.tensors.emplace(prefix + "/" + name, var.value());
  for (const auto& [name, buf] : store.buffers()) a.tensors.emplace(prefix + "/" + name, *buf);
}

void load_section(const Archive& a, const std::string& prefix, nn::ParameterStore& store) {
  const auto section = a.section(prefix);
  std::size_t used = 0;
  auto fetch = [&](const std::string& name, const Tensor& like) -> const Tensor& {
    auto it = section.find(name);
    if (it == section.end() || !it->second.same_shape(like))
      throw InputError("checkpoint: " + prefix + "/" + name + " missing or wrongly shaped");
    ++used;
    return it->second;
  };
  for (const auto& [name, var] : store.parameters()) {
    Var v = var;
    v.mutable_value() = fetch(name, var.value());
  }
  for (const auto& [name, buf] : store.buffers()) *buf = fetch(name, *buf);
  if (used != section.size())
    throw InputError("checkpoint: " + prefix + " holds tensors this model does not have");
}

}  // namespace

TrainState make_train_state(TrainConfig config) {
  config.resolve();
  TrainState s;
  s.encoder = std::make_shared<const ImageEncoder>(config.encoder);
  s.text = std::make_unique<TextEncoder>(config.text_encoder);
  s.generator = std::make_unique<Generator>(config.generator, s.encoder);
  s.discriminator = std::make_unique<Discriminator>(config.discriminator, s.encoder);
  s.opt_g = nn::Adam(s.generator->parameters(), config.adam_g);
  s.opt_d = nn::Adam(s.discriminator->parameters(), config.adam_d);
  s.rng = Rng(derive_seed(config.seed, "train"));
  s.config = std::move(config);
  return s;
}

TermRecord train_step(TrainState& s, const HostBatch& hb) {
  const auto& cfg = s.config;
  PairedBatch batch{Var::constant(hb.real), Var::constant(hb.c_matched),
                    Var::constant(hb.c_mismatched), Var{}, Var::constant(hb.z)};
  {
    ad::NoGradGuard guard;
    batch.fake_images = s.generator->generate(batch.z, batch.c_matched);
  }

  auto d_obj = discriminator_objective(*s.discriminator, batch, cfg.loss, cfg.preset, true);
  d_obj.terms.step = s.step;
  require_finite(d_obj.terms, "discriminator");
  s.opt_d.step(ad::grad(ad::neg(d_obj.value), s.discriminator->parameters().vars()));

  auto g_obj =
      generator_objective(*s.generator, *s.discriminator, *s.encoder, batch, cfg.loss, cfg.preset);
  TermRecord rec = d_obj.terms;
  rec.G_loss = g_obj.terms.G_loss;
  rec.CS = g_obj.terms.CS;
  if (rec.L_MI == 0.0) rec.L_MI = g_obj.terms.L_MI;
  require_finite(rec, "generator");
  s.opt_g.step(ad::grad(g_obj.value, s.generator->parameters().vars()));
  ++s.step;
  return rec;
}

Archive checkpoint_archive(const TrainState& s) {
  Archive a;
  a.meta["format"] = "scad-checkpoint";
  a.meta["version"] = kCheckpointVersion;
  a.meta["step"] = s.step;
  a.meta["config"] = to_json(s.config);
  a.meta["preset"] = to_string(s.config.preset);
  a.meta["variant"] = to_string(s.config.discriminator.variant);
  a.meta["encoder_checksum"] = s.encoder->checksum();
  a.meta["text_encoder_checksum"] = s.text->checksum();
  store_section(a, "generator", s.generator->parameters());
  store_section(a, "discriminator", s.discriminator->parameters());
  a.put_section("optimizer/generator", s.opt_g.state());
  a.put_section("optimizer/discriminator", s.opt_d.state());
  a.blobs["rng"] = s.rng.serialize();
  return a;
}

void save_checkpoint(const TrainState& s, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_archive(checkpoint_archive(s), path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  if (a.meta.value("format", "") != "scad-checkpoint")
    throw InputError(path.string() + " is not a training checkpoint");
  TrainState s = make_train_state(train_config_from_json(a.meta.at("config")));
  if (a.meta.at("encoder_checksum").get<std::uint64_t>() != s.encoder->checksum() ||
      a.meta.at("text_encoder_checksum").get<std::uint64_t>() != s.text->checksum())
    throw ConfigurationError("checkpoint " + path.string() +
                             " was trained against different frozen encoders");
  load_section(a, "generator", s.generator->parameters());
  load_section(a, "discriminator", s.discriminator->parameters());
  s.opt_g.load_state(a.section("optimizer/generator"));
  s.opt_d.load_state(a.section("optimizer/discriminator"));
  auto rng = a.blobs.find("rng");
  if (rng == a.blobs.end()) throw InputError("checkpoint has no rng state");
  s.rng.deserialize(rng->second);
  s.step = a.meta.at("step").get<std::int64_t>();
  return s;
}

Tensor sample_prompt(const Generator& generator, const TextEncoder& text, const std::string& prompt,
                     int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample: n must be at least 1");
  Rng rng(seed);
  const Tensor z = rng.normal_tensor(n, generator.config().d_z);
  ad::NoGradGuard guard;
  return generator.generate(Var::constant(z), Var::constant(text.embed_text(prompt).values)).value();
}

std::vector<std::filesystem::path> write_samples(const std::filesystem::path& dir,
                                                 const std::string& prompt, const Tensor& images,
                                                 int image_size) {
  std::vector<std::filesystem::path> paths;
  for (std::int64_t i = 0; i < images.rows(); ++i) {
    paths.push_back(dir / (slugify(prompt) + "_" + std::to_string(i) + ".png"));
    write_png(paths.back(), row_to_image(images.row_at(i), image_size));
  }
  return paths;
}

void export_images(const Generator& generator, const TextEncoder& text,
                   const std::vector<std::string>& prompts, int n, std::uint64_t seed,
                   const std::filesystem::path& dir) {
  for (const auto& prompt : prompts) {
    const Tensor images = sample_prompt(generator, text, prompt, n, derive_seed(seed, prompt));
    for (std::int64_t i = 0; i < images.rows(); ++i)
      write_png(dir / slugify(prompt) / (std::to_string(i) + ".png"),
                row_to_image(images.row_at(i), generator.config().image_size));
  }
}

namespace {

// Keeps the header and rows logged before `step`, so a resumed run appends
// exactly where the checkpoint left off.
void prepare_csv(const std::filesystem::path& path, std::int64_t step) {
  std::vector<std::string> kept;
  if (step > 0 && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty() && std::stoll(line.substr(0, line.find(','))) < step) kept.push_back(line);
  }
  std::ofstream out(path, std::ios::trunc);
  out << TermRecord::csv_header() << '\n';
  for (const auto& l : kept) out << l << '\n';
}

void write_sample_grid(const TrainState& s, const std::vector<std::string>& prompts,
                       const Tensor& noise, const std::filesystem::path& path) {
  std::vector<Tensor> rows;
  ad::NoGradGuard guard;
  for (const auto& p : prompts)
    rows.push_back(s.generator
                       ->generate(Var::constant(noise),
                                  Var::constant(s.text->embed_text(p).values))
                       .value());
  write_png(path, tile_images(vstack(rows), s.config.image_size, kGridColumns));
}

}  // namespace

TrainResult train(const TrainConfig& requested, const TrainOptions& options) {
  TrainConfig config = requested;
  config.resolve();

  std::optional<Dataset> owned;
  const Dataset* data = options.dataset;
  if (!data) {
    const Manifest manifest = load_manifest(config.dataset);
    std::vector<std::string> warnings = manifest.warnings;
    owned.emplace(Dataset::from_manifest(manifest, config.image_size, &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    data = &*owned;
  }
  if (data->image_size() != config.image_size)
    throw ConfigurationError("dataset image size differs from config.image_size");

  TrainState s = options.resume ? load_checkpoint(*options.resume) : make_train_state(config);
  // Run length and output location follow the caller; the model is the checkpoint's.
  s.config.epochs = config.epochs;
  s.config.steps_per_epoch = config.steps_per_epoch;
  s.config.output = config.output;

  const auto& out = s.config.output;
  std::filesystem::create_directories(out.dir / "checkpoints");
  const auto csv_path = out.dir / "loss.csv";
  prepare_csv(csv_path, s.step);
  std::ofstream csv(csv_path, std::ios::app);

  const std::int64_t b = s.config.batch_size;
  const std::int64_t spe = s.config.steps_per_epoch > 0
                               ? s.config.steps_per_epoch
                               : std::max<std::int64_t>(1, data->size() / b);
  const std::int64_t total = static_cast<std::int64_t>(s.config.epochs) * spe;
  const Tensor grid_noise =
      Rng(derive_seed(s.config.seed, "sample_noise")).normal_tensor(kGridColumns, s.config.generator.d_z);
  std::vector<std::string> prompts = out.sample_prompts;
  if (prompts.empty()) {
    for (const auto& c : data->captions())
      if (std::find(prompts.begin(), prompts.end(), c) == prompts.end() && prompts.size() < 4)
        prompts.push_back(c);
  }

  TrainResult result;
  std::int64_t epoch_cached = -1;
  std::vector<std::size_t> order;
  std::int64_t ran = 0;
  while (s.step < total && (options.max_steps < 0 || ran < options.max_steps)) {
    const std::int64_t epoch = s.step / spe;
    if (epoch != epoch_cached) {
      order = data->epoch_order(s.config.seed, epoch);
      epoch_cached = epoch;
    }
    std::vector<std::size_t> idx;
    for (std::int64_t k = 0; k < b; ++k)
      idx.push_back(order[static_cast<std::size_t>(((s.step % spe) * b + k) % data->size())]);
    const HostBatch hb = make_batch(*data, idx, *s.text, s.config.generator.d_z, s.rng);
    const TermRecord rec = train_step(s, hb);
    ++ran;
    csv << rec.csv_row() << '\n' << std::flush;
    result.log.push_back(rec);
    if (options.on_step) options.on_step(rec);
    if (out.checkpoint_every > 0 && s.step % out.checkpoint_every == 0 && s.step < total)
      save_checkpoint(s, out.dir / "checkpoints" / (step_name(s.step) + ".scad"));
    if (out.sample_every > 0 && s.step % out.sample_every == 0)
      write_sample_grid(s, prompts, grid_noise, out.dir / "samples" / (step_name(s.step) + ".png"));
  }
  result.final_checkpoint = out.dir / "checkpoints" / (step_name(s.step) + ".scad");
  save_checkpoint(s, result.final_checkpoint);
  save_checkpoint(s, out.dir / "latest.scad");
  return result;
}

}  // namespace scad
