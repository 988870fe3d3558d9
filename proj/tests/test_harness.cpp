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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "scad/config.hpp"
#include "scad/dataset.hpp"
#include "scad/errors.hpp"
#include "scad/image_io.hpp"
#include "scad/synthetic.hpp"
#include "scad/trainer.hpp"

namespace scad {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scad_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig tiny_config(Preset preset, const fs::path& out) {
  TrainConfig c;
  c.preset = preset;
  c.batch_size = 4;
  c.epochs = 1;
  c.steps_per_epoch = 4;
  c.seed = 11;
  c.generator.d_z = 8;
  c.generator.d_c = 16;
  c.generator.hidden = 16;
  c.generator.width = 8;
  c.generator.injection_tokens = 2;
  c.encoder.d_tok = 8;
  c.encoder.n_layers = 2;
  c.encoder.injection_layers = {1};
  c.discriminator.d_h = 16;
  c.discriminator.hidden = 8;
  c.discriminator.direction_hidden = 8;
  c.output.dir = out;
  c.output.checkpoint_every = 0;
  c.output.sample_every = 0;
  return c;
}

Dataset toy_data() { return make_mode_dataset(2).sample(2, 0.05, 3); }

std::map<std::string, Tensor> snapshot(const nn::ParameterStore& store) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : store.parameters()) out.emplace(name, v.value());
  return out;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

TEST(Manifest, MissingImagesAreSkippedWithWarnings) {
  const auto dir = scratch("manifest");
  Image img{4, 4, std::vector<std::uint8_t>(48, 128)};
  std::vector<std::string> lines;
  for (int i = 0; i < 10; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    if (i != 6) write_png(dir / name, img);
    lines.push_back(R"({"image": ")" + name + R"(", "caption": "a grey patch"})");
  }
  write_manifest(dir / "m.jsonl", lines);
  const Manifest m = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.records.size(), 9u);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("img6.png"), std::string::npos);
}

TEST(Manifest, EmptyOrMalformedIsFatal) {
  const auto dir = scratch("manifest_bad");
  write_manifest(dir / "empty.jsonl", {});
  EXPECT_THROW(load_manifest(dir / "empty.jsonl"), InputError);
  write_manifest(dir / "bad.jsonl", {"{not json"});
  EXPECT_THROW(load_manifest(dir / "bad.jsonl"), InputError);
  write_manifest(dir / "nocap.jsonl", {R"({"image": "x.png"})"});
  EXPECT_THROW(load_manifest(dir / "nocap.jsonl"), InputError);
  EXPECT_THROW(load_manifest(dir / "absent.jsonl"), InputError);
}

TEST(Derangement, NoCaptionKeepsItsImageOver1000Batches) {
  Rng rng(5);
  const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(15));
    std::vector<std::string> caps;
    for (std::size_t i = 0; i < n; ++i) caps.push_back(pool[rng.uniform_int(6)]);
    const auto p = derangement(caps, rng);
    ASSERT_EQ(p.size(), n);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(sorted[i], i);
      ASSERT_NE(p[i], i);
    }
  }
}

TEST(Derangement, PrefersDifferentCaptionsWhenPossible) {
  Rng rng(9);
  const std::vector<std::string> caps{"x", "x", "y", "y", "z", "z"};
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = derangement(caps, rng);
    for (std::size_t i = 0; i < caps.size(); ++i) ASSERT_NE(caps[p[i]], caps[i]);
  }
}

TEST(Derangement, PairIsASwap) {
  Rng rng(1);
  const std::vector<std::string> caps{"a", "b"};
  EXPECT_EQ(derangement(caps, rng), (std::vector<std::size_t>{1, 0}));
}

TEST(Batch, DeterministicAndRejectsSingletons) {
  const Dataset data = toy_data();
  const TextEncoder text({.d_c = 16, .seed = 2});
  const std::vector<std::size_t> idx{0, 3, 5, 9};
  Rng a(4), b(4);
  const HostBatch x = make_batch(data, idx, text, 8, a);
  const HostBatch y = make_batch(data, idx, text, 8, b);
  EXPECT_EQ(x.real, y.real);
  EXPECT_EQ(x.z, y.z);
  EXPECT_EQ(x.c_mismatched, y.c_mismatched);
  EXPECT_EQ(x.mismatch, y.mismatch);
  const std::vector<std::size_t> one{0};
  EXPECT_THROW(make_batch(data, one, text, 8, a), InputError);
}

TEST(ImageIo, PngRoundTripIsExactAtNativeSize) {
  const auto dir = scratch("png");
  const ModeDataset set = make_mode_dataset(1);
  const Image img = row_to_image(set.templates[0][2], 32);
  write_png(dir / "sub" / "t.png", img);
  const Image back = read_png(dir / "sub" / "t.png");
  EXPECT_EQ(back.width, 32);
  EXPECT_EQ(back.rgb, img.rgb);
  EXPECT_EQ(image_to_row(back, 32), set.templates[0][2]);
}

TEST(Config, JsonRoundTripAndOverrides) {
  TrainConfig c = tiny_config(Preset::scad_dd, "runs/x");
  c.loss.mu = 2.5;
  const auto j = to_json(c);
  const TrainConfig back = train_config_from_json(j);
  EXPECT_EQ(to_json(back), j);

  auto tree = j;
  apply_override(tree, "loss.k1", "0.25");
  apply_override(tree, "discriminator.variant", "hxc_wc");
  apply_override(tree, "output.dir", "elsewhere");
  const TrainConfig o = train_config_from_json(tree);
  EXPECT_DOUBLE_EQ(o.loss.k1, 0.25);
  EXPECT_EQ(o.discriminator.variant, DiscriminatorVariant::hxc_wc);
  EXPECT_EQ(o.output.dir, fs::path("elsewhere"));

  auto bad = j;
  bad["loss"]["kappa"] = 1.0;
  EXPECT_THROW(train_config_from_json(bad), ConfigurationError);
  bad = j;
  bad["optimiser"] = 1;
  EXPECT_THROW(train_config_from_json(bad), ConfigurationError);
}

TEST(Config, PresetFixesLambdaAndHeads) {
  TrainConfig c = tiny_config(Preset::scad, "x");
  c.loss.lambda = 5.0;
  c.resolve();
  EXPECT_EQ(c.loss.lambda, 0.0);
  EXPECT_FALSE(c.discriminator.noise_predictor);
  c = tiny_config(Preset::scad_mi, "x");
  c.resolve();
  EXPECT_EQ(c.loss.lambda, 1.0);
  EXPECT_TRUE(c.discriminator.noise_predictor);
  EXPECT_FALSE(c.discriminator.fidelity_branch);
  c = tiny_config(Preset::scad_dd, "x");
  c.resolve();
  EXPECT_TRUE(c.discriminator.fidelity_branch);
  EXPECT_FALSE(c.discriminator.noise_predictor);
}

TEST(Config, MiWithDualBranchNeedsTheFlag) {
  TrainConfig c = tiny_config(Preset::scad_mi, "x");
  c.discriminator.fidelity_branch = true;
  EXPECT_THROW(c.resolve(), ConfigurationError);
  c = tiny_config(Preset::scad_dd, "x");
  c.allow_experimental_mi_dd = true;
  EXPECT_THROW(c.resolve(), ConfigurationError);
  c = tiny_config(Preset::scad_mi, "x");
  c.allow_experimental_mi_dd = true;
  c.resolve();
  EXPECT_TRUE(c.discriminator.fidelity_branch);
  EXPECT_TRUE(c.discriminator.noise_predictor);
}

TEST(Training, PresetsAllocateTheirHeads) {
  const auto scad = make_train_state(tiny_config(Preset::scad, "x"));
  EXPECT_TRUE(scad.discriminator->parameters_under("fidelity").empty());
  EXPECT_TRUE(scad.discriminator->parameters_under("noise").empty());
  EXPECT_FALSE(scad.discriminator->parameters_under("semantic").empty());
  const auto dd = make_train_state(tiny_config(Preset::scad_dd, "x"));
  EXPECT_FALSE(dd.discriminator->parameters_under("fidelity").empty());
  EXPECT_FALSE(dd.discriminator->parameters_under("semantic").empty());
  const auto mi = make_train_state(tiny_config(Preset::scad_mi, "x"));
  EXPECT_FALSE(mi.discriminator->parameters_under("noise").empty());
}

TEST(Training, ZeroLearningRateLeavesParametersAndEncoderUntouched) {
  TrainConfig c = tiny_config(Preset::scad_mi, "x");
  c.adam_g.lr = 0.0;
  c.adam_d.lr = 0.0;
  TrainState s = make_train_state(c);
  const auto g0 = snapshot(s.generator->parameters());
  const auto d0 = snapshot(s.discriminator->parameters());
  const auto enc0 = s.encoder->checksum();
  const Dataset data = toy_data();
  const std::vector<std::size_t> idx{0, 1, 4, 6};
  for (int i = 0; i < 3; ++i) train_step(s, make_batch(data, idx, *s.text, 8, s.rng));
  EXPECT_EQ(snapshot(s.generator->parameters()), g0);
  EXPECT_EQ(snapshot(s.discriminator->parameters()), d0);
  EXPECT_EQ(s.encoder->checksum(), enc0);
  EXPECT_EQ(s.step, 3);
}

TEST(Training, EachStepOnlyMovesItsOwnPlayer) {
  const Dataset data = toy_data();
  const std::vector<std::size_t> idx{0, 2, 5, 7};
  for (const bool freeze_g : {true, false}) {
    TrainConfig c = tiny_config(Preset::scad_dd, "x");
    (freeze_g ? c.adam_g : c.adam_d).lr = 0.0;
    TrainState s = make_train_state(c);
    const auto g0 = snapshot(s.generator->parameters());
    const auto d0 = snapshot(s.discriminator->parameters());
    const auto enc0 = s.encoder->checksum();
    train_step(s, make_batch(data, idx, *s.text, 8, s.rng));
    EXPECT_EQ(snapshot(s.generator->parameters()) == g0, freeze_g);
    EXPECT_EQ(snapshot(s.discriminator->parameters()) == d0, !freeze_g);
    EXPECT_EQ(s.encoder->checksum(), enc0);
  }
}

TEST(Training, DiscriminatorAscendsWithFrozenGenerator) {
  TrainConfig c = tiny_config(Preset::scad, "x");
  c.batch_size = 2;
  c.adam_g.lr = 0.0;
  c.adam_d.lr = 1e-4;
  TrainState s = make_train_state(c);
  const Dataset data = make_mode_dataset(2).sample(1, 0.0, 1);
  const std::vector<std::size_t> idx{0, 4};
  Rng batch_rng(3);
  const HostBatch hb = make_batch(data, idx, *s.text, 8, batch_rng);
  std::vector<double> objective;
  for (int i = 0; i < 50; ++i) objective.push_back(-train_step(s, hb).D_loss);
  for (std::size_t i = 1; i < objective.size(); ++i)
    EXPECT_GE(objective[i], objective[i - 1] - 1e-9) << "step " << i;
  EXPECT_GT(objective.back(), objective.front());
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto dir = scratch("ckpt");
  TrainState s = make_train_state(tiny_config(Preset::scad_dd, dir));
  const Dataset data = toy_data();
  const std::vector<std::size_t> idx{1, 2, 3, 4};
  train_step(s, make_batch(data, idx, *s.text, 8, s.rng));
  save_checkpoint(s, dir / "a.scad");
  const TrainState back = load_checkpoint(dir / "a.scad");
  save_checkpoint(back, dir / "b.scad");
  EXPECT_EQ(slurp(dir / "a.scad"), slurp(dir / "b.scad"));
  EXPECT_EQ(back.step, 1);
}

TEST(Checkpoint, ForeignEncoderIsRejected) {
  const auto dir = scratch("ckpt_enc");
  TrainState s = make_train_state(tiny_config(Preset::scad, dir));
  Archive a = checkpoint_archive(s);
  a.meta["encoder_checksum"] = 0;
  write_archive(a, dir / "bad.scad");
  EXPECT_THROW(load_checkpoint(dir / "bad.scad"), ConfigurationError);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  const Dataset data = toy_data();
  const auto one = scratch("resume_one");
  const auto two = scratch("resume_two");
  const TrainResult straight = train(tiny_config(Preset::scad_mi, one), {.dataset = &data});
  const TrainConfig c2 = tiny_config(Preset::scad_mi, two);
  const TrainResult first = train(c2, {.dataset = &data, .max_steps = 2});
  const TrainResult idle = train(c2, {.dataset = &data, .resume = first.final_checkpoint, .max_steps = 0});
  EXPECT_EQ(slurp(idle.final_checkpoint), slurp(first.final_checkpoint));
  const TrainResult rest = train(c2, {.dataset = &data, .resume = first.final_checkpoint});
  EXPECT_EQ(rest.log.size(), 2u);
  EXPECT_EQ(slurp(one / "loss.csv"), slurp(two / "loss.csv"));
  // Stored output dirs differ, so compare the trained tensors.
  EXPECT_EQ(read_archive(straight.final_checkpoint).tensors, read_archive(rest.final_checkpoint).tensors);
}

TEST(Checkpoint, SameSeedGivesIdenticalLossLog) {
  const Dataset data = toy_data();
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  train(tiny_config(Preset::scad_dd, a), {.dataset = &data});
  train(tiny_config(Preset::scad_dd, b), {.dataset = &data});
  const std::string log = slurp(a / "loss.csv");
  EXPECT_EQ(log, slurp(b / "loss.csv"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
}

TEST(Samples, ExportLayout) {
  const auto dir = scratch("export");
  TrainState s = make_train_state(tiny_config(Preset::scad, dir));
  export_images(*s.generator, *s.text, {"a red square", "a blue square"}, 3, 7, dir);
  EXPECT_TRUE(fs::exists(dir / "a-red-square" / "2.png"));
  EXPECT_TRUE(fs::exists(dir / "a-blue-square" / "0.png"));
  const Tensor x = sample_prompt(*s.generator, *s.text, "a red square", 3, 7);
  EXPECT_EQ(x, sample_prompt(*s.generator, *s.text, "a red square", 3, 7));
  EXPECT_LE(x.max_abs(), 1.0);
}

TEST(Synthetic, TemplatesRecoverAllModes) {
  const ModeDataset set = make_mode_dataset(2);
  const Dataset d = set.sample(3, 0.05, 2);
  EXPECT_EQ(d.size(), 24);
  EXPECT_EQ(count_recovered_modes(d.images(), set, 0), 4);
  const Tensor one_mode = vstack({set.templates[1][0], set.templates[1][0], set.templates[1][3]});
  EXPECT_EQ(count_recovered_modes(one_mode, set, 1), 1);
  EXPECT_EQ(count_recovered_modes(one_mode, set, 0), 0);
}

}  // namespace
}  // namespace scad
