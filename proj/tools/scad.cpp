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

// scad: command-line front end (train, sample, interpolate, eval-ppd, export-images).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "scad/config.hpp"
#include "scad/errors.hpp"
#include "scad/image_io.hpp"
#include "scad/metrics.hpp"
#include "scad/trainer.hpp"

namespace {

using namespace scad;
namespace fs = std::filesystem;

std::vector<std::string> read_prompts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open prompts file " + path.string());
  std::vector<std::string> prompts;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    prompts.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
  }
  if (prompts.empty()) throw InputError("prompts file " + path.string() + " has no prompts");
  return prompts;
}

struct TrainArgs {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  bool allow_mi_dd = false;
  std::string resume;
};

int run_train(const TrainArgs& a) {
  nlohmann::json tree = a.config.empty() ? to_json(TrainConfig{}) : read_json_file(a.config);
  if (!a.preset.empty()) tree["preset"] = a.preset;
  if (a.allow_mi_dd) tree["allow_experimental_mi_dd"] = true;
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigurationError("--set expects key=value, got '" + kv + "'");
    apply_override(tree, kv.substr(0, eq), kv.substr(eq + 1));
  }
  TrainConfig cfg = train_config_from_json(tree);
  TrainConfig shown = cfg;
  shown.resolve();
  std::cerr << "preset " << to_string(shown.preset) << ", lambda " << shown.loss.lambda
            << ", variant " << to_string(shown.discriminator.variant) << '\n';
  TrainOptions opts;
  if (!a.resume.empty()) opts.resume = fs::path(a.resume);
  opts.on_step = [](const TermRecord& r) {
    if (r.step % 50 == 0)
      std::cerr << "step " << r.step << " D_loss " << r.D_loss << " G_loss " << r.G_loss << '\n';
  };
  const TrainResult result = train(cfg, opts);
  std::cout << result.final_checkpoint.string() << '\n';
  return 0;
}

struct SampleArgs {
  std::string checkpoint;
  std::string prompt;
  int n = 8;
  std::uint64_t seed = 0;
  std::string out = "samples";
};

int run_sample(const SampleArgs& a) {
  const TrainState s = load_checkpoint(a.checkpoint);
  const Tensor images = sample_prompt(*s.generator, *s.text, a.prompt, a.n, a.seed);
  for (const auto& p : write_samples(a.out, a.prompt, images, s.config.image_size))
    std::cout << p.string() << '\n';
  return 0;
}

struct InterpolateArgs {
  std::string checkpoint;
  std::string prompt;
  int steps = 8;
  std::uint64_t seed = 0;
  std::uint64_t seed_end = 1;
  std::string out = "interpolation";
};

int run_interpolate(const InterpolateArgs& a) {
  const TrainState s = load_checkpoint(a.checkpoint);
  const int dz = s.config.generator.d_z;
  const Tensor z0 = Rng(a.seed).normal_tensor(1, dz);
  const Tensor z1 = Rng(a.seed_end).normal_tensor(1, dz);
  const Tensor c = s.text->embed_text(a.prompt).values;
  const Tensor frames = vstack(s.generator->interpolate(z0, z1, a.steps, c));
  const int size = s.config.image_size;
  const auto paths = write_samples(a.out, a.prompt, frames, size);
  const fs::path strip = fs::path(a.out) / (slugify(a.prompt) + "_strip.png");
  write_png(strip, tile_images(frames, size, a.steps));
  for (const auto& p : paths) std::cout << p.string() << '\n';
  std::cout << strip.string() << '\n';
  return 0;
}

struct PpdArgs {
  std::string checkpoint;
  std::string prompts_file;
  int n = PPDConfig{}.n;
  int k = PPDConfig{}.k;
  std::string p = format_norm_order(PPDConfig{}.p);
  std::uint64_t seed = 0;
  std::string embedder;
  std::string out = "ppd_report.json";
};

int run_eval_ppd(const PpdArgs& a) {
  PPDConfig cfg{.p = parse_norm_order(a.p), .n = a.n, .k = a.k};
  cfg.validate();
  std::vector<std::string> prompts = read_prompts(a.prompts_file);
  if (static_cast<int>(prompts.size()) > cfg.k) prompts.resize(static_cast<std::size_t>(cfg.k));
  else if (static_cast<int>(prompts.size()) < cfg.k)
    std::cerr << "warning: " << prompts.size() << " prompts available, K=" << cfg.k
              << " requested; using all of them\n";
  const TrainState s = load_checkpoint(a.checkpoint);
  EmbedderSpec spec = s.config.embedder;
  if (!a.embedder.empty()) {
    spec.kind = EncoderKind::external;
    spec.path = a.embedder;
  }
  const DiversityEmbedder embedder(spec);
  const GeneratorModel model(*s.generator, *s.text);
  const PPDReport report = mppd(model, embedder, prompts, cfg, a.seed);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << report.to_json().dump(2) << '\n';
  std::cout << "mPPD " << report.mppd << " +- " << report.stderr_ << " (K=" << report.config.k
            << ", N=" << report.config.n << ", p=" << format_norm_order(report.config.p) << ")\n";
  return 0;
}

struct ExportArgs {
  std::string checkpoint;
  std::string prompts_file;
  int n = 8;
  std::uint64_t seed = 0;
  std::string out = "generated";
};

int run_export(const ExportArgs& a) {
  const TrainState s = load_checkpoint(a.checkpoint);
  export_images(*s.generator, *s.text, read_prompts(a.prompts_file), a.n, a.seed, a.out);
  std::cout << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-conditioned GAN training and evaluation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train from a config file");
  train->add_option("--config", train_args.config, "JSON config")->check(CLI::ExistingFile);
  train->add_option("--preset", train_args.preset, "scad, scad-mi or scad-dd");
  train->add_option("--set", train_args.overrides, "Override a config key: dotted.key=value");
  train->add_flag("--allow-experimental-mi-dd", train_args.allow_mi_dd,
                  "Permit the fidelity branch together with scad-mi");
  train->add_option("--resume", train_args.resume, "Checkpoint to resume from")
      ->check(CLI::ExistingFile);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Generate images for one prompt");
  sample->add_option("--checkpoint", sample_args.checkpoint)->required()->check(CLI::ExistingFile);
  sample->add_option("--prompt", sample_args.prompt)->required();
  sample->add_option("--n", sample_args.n)->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_args.seed);
  sample->add_option("--out", sample_args.out, "Output directory");

  InterpolateArgs interp_args;
  auto* interp = app.add_subcommand("interpolate", "Linear walk between two noise seeds");
  interp->add_option("--checkpoint", interp_args.checkpoint)->required()->check(CLI::ExistingFile);
  interp->add_option("--prompt", interp_args.prompt)->required();
  interp->add_option("--steps", interp_args.steps)->check(CLI::Range(2, 1 << 16));
  interp->add_option("--seed", interp_args.seed, "Seed of the start noise");
  interp->add_option("--seed-end", interp_args.seed_end, "Seed of the end noise");
  interp->add_option("--out", interp_args.out, "Output directory");

  PpdArgs ppd_args;
  auto* ppd = app.add_subcommand("eval-ppd", "Per-prompt diversity report");
  ppd->add_option("--checkpoint", ppd_args.checkpoint)->required()->check(CLI::ExistingFile);
  ppd->add_option("--prompts-file", ppd_args.prompts_file, "One prompt per line")
      ->required()
      ->check(CLI::ExistingFile);
  ppd->add_option("--n", ppd_args.n, "Samples per prompt")->capture_default_str();
  ppd->add_option("--k", ppd_args.k, "Prompts evaluated")->capture_default_str();
  ppd->add_option("--p", ppd_args.p, "Norm order (>= 1 or inf)")->capture_default_str();
  ppd->add_option("--seed", ppd_args.seed);
  ppd->add_option("--embedder", ppd_args.embedder, "External embedder weights archive");
  ppd->add_option("--out", ppd_args.out, "Report JSON path")->capture_default_str();

  ExportArgs export_args;
  auto* exp = app.add_subcommand("export-images", "Per-prompt image folders for FID tools");
  exp->add_option("--checkpoint", export_args.checkpoint)->required()->check(CLI::ExistingFile);
  exp->add_option("--prompts-file", export_args.prompts_file)->required()->check(CLI::ExistingFile);
  exp->add_option("--n", export_args.n, "Images per prompt")->check(CLI::PositiveNumber);
  exp->add_option("--seed", export_args.seed);
  exp->add_option("--out", export_args.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return run_train(train_args);
    if (*sample) return run_sample(sample_args);
    if (*interp) return run_interpolate(interp_args);
    if (*ppd) return run_eval_ppd(ppd_args);
    if (*exp) return run_export(export_args);
  } catch (const scad::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
