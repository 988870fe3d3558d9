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

#include "scad/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "scad/errors.hpp"

namespace scad {

std::string to_string(Preset p) {
  switch (p) {
    case Preset::scad:
      return "scad";
    case Preset::scad_mi:
      return "scad-mi";
    case Preset::scad_dd:
      return "scad-dd";
  }
  return "scad";
}

Preset preset_from_string(std::string_view s) {
  std::string key;
  for (char ch : s) key.push_back(ch == '_' ? '-' : static_cast<char>(std::tolower(ch)));
  if (key == "scad") return Preset::scad;
  if (key == "scad-mi") return Preset::scad_mi;
  if (key == "scad-dd") return Preset::scad_dd;
  throw ConfigurationError("unknown preset '" + std::string(s) + "' (scad|scad-mi|scad-dd)");
}

PresetFlags preset_flags(Preset p) {
  switch (p) {
    case Preset::scad:
      return {};
    case Preset::scad_mi:
      return {.fidelity_branch = false, .noise_predictor = true, .lambda = 1.0};
    case Preset::scad_dd:
      return {.fidelity_branch = true, .noise_predictor = false, .lambda = 0.0};
  }
  return {};
}

const char* TermRecord::csv_header() {
  return "step,V_hinge_c,V_wass_c,GP_c,V_hinge,V_wass,GP,L_MI,CS,G_loss,D_loss";
}

std::string TermRecord::csv_row() const {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<long long>(step), V_hinge_c, V_wass_c, GP_c, V_hinge, V_wass, GP, L_MI,
                CS, G_loss, D_loss);
  return buf;
}

namespace {

void require_scores(const Var& s, const char* what) {
  if (!s.defined() || s.value().size() == 0)
    throw InputError(std::string(what) + ": empty score batch");
}

}  // namespace

Var hinge_real_term(const Var& real) {
  require_scores(real, "hinge");
  return ad::mean(ad::min_zero(ad::add_scalar(real, -1.0)));
}

Var hinge_fake_term(const Var& fake) {
  require_scores(fake, "hinge");
  return ad::mean(ad::min_zero(ad::add_scalar(ad::neg(fake), -1.0)));
}

Var wass_real_term(const Var& real) {
  require_scores(real, "wasserstein");
  return ad::mean(real);
}

Var wass_fake_term(const Var& fake) {
  require_scores(fake, "wasserstein");
  return ad::neg(ad::mean(fake));
}

Var san_hinge(const Var& real, const Var& fake) {
  return ad::add(hinge_real_term(real), hinge_fake_term(fake));
}

Var san_wass(const Var& real, const Var& fake) {
  return ad::add(wass_real_term(real), wass_fake_term(fake));
}

Var augment_mismatch(SanTerm term, const Var& real, const Var& fake, const Var& mismatch,
                     double w) {
  require_scores(real, "augment_mismatch");
  if (real.rows() < 2) throw InputError("augment_mismatch: batch size must be at least 2");
  if (mismatch.rows() != real.rows())
    throw InputError("augment_mismatch: mismatch batch must pair with the real batch");
  const Var mixed = ad::add(ad::scale(term.fake(fake), 1.0 - w), ad::scale(term.fake(mismatch), w));
  return ad::add(term.real(real), mixed);
}

namespace {

Var leaf_copy(const Var& v) { return Var::leaf(v.value()); }

void require_grad_mode(const char* what) {
  if (!ad::grad_enabled())
    throw InputError(std::string(what) + ": needs gradient recording (called under NoGradGuard)");
}

// k (|g_b|^2 + eps)^(l/2) per sample, as [B, 1].
Var norm_power(const Var& g, std::int64_t batch, double k, double l, double eps, const char* what) {
  const Var flat = ad::reshape(g, batch, g.value().size() / batch);
  const Var sq = ad::sum_cols(ad::square(flat));
  for (std::int64_t b = 0; b < batch; ++b)
    if (!std::isfinite(sq.value()[b]))
      throw NumericError(std::string(what) + ": non-finite gradient at batch index " +
                         std::to_string(b));
  return ad::scale(ad::pow_scalar(ad::add_scalar(sq, eps), l / 2.0), k);
}

Var check_penalty(const Var& p, const char* what) {
  if (!std::isfinite(p.item())) throw NumericError(std::string(what) + ": non-finite penalty");
  return p;
}

}  // namespace

Var gp_matching_aware(const ConditionalScore& score, const FeatureGrid& real, const Var& c,
                      const LossConfig& cfg) {
  require_grad_mode("gp_matching_aware");
  FeatureGrid feats = real;
  feats.tokens = leaf_copy(real.tokens);
  const Var cond = leaf_copy(c);
  const Var d = score(feats, cond);
  const auto g = ad::grad(ad::sum(d), {feats.tokens, cond}, /*create_graph=*/true);
  const Var per_sample =
      ad::add(norm_power(g[0], real.batch, cfg.k1, cfg.l1, cfg.gp_eps, "gp_matching_aware"),
              norm_power(g[1], real.batch, cfg.k2, cfg.l2, cfg.gp_eps, "gp_matching_aware"));
  return check_penalty(ad::mean(per_sample), "gp_matching_aware");
}

Var gp_standard(const UnconditionalScore& score, const FeatureGrid& real, const LossConfig& cfg) {
  require_grad_mode("gp_standard");
  FeatureGrid feats = real;
  feats.tokens = leaf_copy(real.tokens);
  const Var d = score(feats);
  const auto g = ad::grad(ad::sum(d), {feats.tokens}, /*create_graph=*/true);
  return check_penalty(
      ad::mean(norm_power(g[0], real.batch, cfg.k1, cfg.l1, cfg.gp_eps, "gp_standard")),
      "gp_standard");
}

Var mi_loss(const Var& z, const Var& z_pred) {
  if (!z.value().same_shape(z_pred.value()) || z.value().size() == 0)
    throw InputError("mi_loss: z " + z.value().shape_string() + " vs prediction " +
                     z_pred.value().shape_string());
  return ad::neg(ad::mean(ad::square(ad::sub(z, z_pred))));
}

Var clip_guidance(const Var& image_embeddings, const Var& c) {
  if (image_embeddings.cols() != c.cols())
    throw ConfigurationError("clip_guidance: image embedding width " +
                             std::to_string(image_embeddings.cols()) +
                             " differs from text width " + std::to_string(c.cols()));
  Var text = c;
  if (c.rows() == 1 && image_embeddings.rows() > 1) text = nn::repeat_rows(c, image_embeddings.rows());
  if (text.rows() != image_embeddings.rows())
    throw InputError("clip_guidance: text rows must be 1 or match the images");
  return ad::mean(ad::row_dot(ad::l2_normalize_rows(image_embeddings, nn::kNormEps),
                              ad::l2_normalize_rows(text, nn::kNormEps)));
}

namespace {

struct ActiveBranches {
  bool fidelity = false;
  bool mi = false;
  double lambda = 0.0;
};

ActiveBranches check_heads(const Discriminator& d, const LossConfig& cfg, Preset preset) {
  const auto flags = preset_flags(preset);
  ActiveBranches active{flags.fidelity_branch, flags.noise_predictor && cfg.lambda > 0.0,
                        cfg.lambda};
  if (flags.noise_predictor && !d.has_noise_predictor())
    throw ConfigurationError(to_string(preset) + " needs the noise predictor head");
  if (flags.fidelity_branch && !d.has_fidelity())
    throw ConfigurationError(to_string(preset) + " needs the fidelity branch");
  if (!flags.noise_predictor && cfg.lambda != 0.0)
    throw ConfigurationError(to_string(preset) + " does not use the MI loss (lambda must be 0)");
  if (d.has_fidelity() && !flags.fidelity_branch) {
    if (!(preset == Preset::scad_mi && cfg.experimental_mi_dd))
      throw ConfigurationError(to_string(preset) + " has a single discriminator branch");
    active.fidelity = true;
  }
  return active;
}

FeatureGrid stack(std::initializer_list<FeatureGrid> grids) {
  std::vector<Var> parts;
  std::int64_t batch = 0;
  for (const auto& g : grids) {
    parts.push_back(g.tokens);
    batch += g.batch;
  }
  const auto& first = *grids.begin();
  return FeatureGrid{ad::concat_rows(parts), first.stage, batch, first.length, first.d_tok};
}

// Per-sample mean over the patch scores.
Var mean_over_patches(const Var& scores, std::int64_t batch, std::int64_t patches) {
  return ad::scale(ad::sum_cols(ad::reshape(scores, batch, patches)), 1.0 / patches);
}

double value_of(const Var& v) { return v.defined() ? v.item() : 0.0; }

}  // namespace

ObjectiveValue discriminator_objective(const Discriminator& d, const PairedBatch& batch,
                                       const LossConfig& cfg, Preset preset, bool training) {
  const auto active = check_heads(d, cfg, preset);
  const auto b = batch.size();
  if (b < 2) throw InputError("discriminator_objective: batch size must be at least 2");
  const Var fake = ad::detach(batch.fake_images);
  const bool san = cfg.objective == DiscriminatorObjective::san;

  const FeatureGrid cl_real = d.encode(batch.real_images);
  const FeatureGrid cl_fake = d.encode(fake);

  // Real, fake and mismatched pairs share one pass so spectral norm steps once.
  const SanOutput sem = d.semantic(stack({cl_real, cl_fake, cl_real}),
                                   ad::concat_rows({batch.c_matched, batch.c_matched,
                                                    batch.c_mismatched}),
                                   training);
  const Var s_hinge = san_scores(sem, san ? ScoreMode::hinge : ScoreMode::plain);
  auto part = [b](const Var& s, int i) { return ad::slice_rows(s, i * b, (i + 1) * b); };

  TermRecord rec;
  const Var vh_c =
      augment_mismatch(kHingeTerm, part(s_hinge, 0), part(s_hinge, 1), part(s_hinge, 2),
                       cfg.mismatch_weight);
  Var total = vh_c;
  Var vw_c;
  if (san) {
    const Var s_wass = san_scores(sem, ScoreMode::wass);
    vw_c = augment_mismatch(kWassTerm, part(s_wass, 0), part(s_wass, 1), part(s_wass, 2),
                            cfg.mismatch_weight);
    total = ad::add(total, vw_c);
  }
  const Var gp_c = gp_matching_aware(
      [&](const FeatureGrid& f, const Var& c) {
        return san_scores(d.semantic(f, c, false), ScoreMode::plain);
      },
      cl_real, batch.c_matched, cfg);
  total = ad::sub(total, gp_c);
  rec.V_hinge_c = vh_c.item();
  rec.V_wass_c = value_of(vw_c);
  rec.GP_c = gp_c.item();

  if (active.fidelity) {
    const auto p = d.patch_count();
    const SanOutput fid = d.fidelity(stack({cl_real, cl_fake}), training);
    const Var fh = san_scores(fid, san ? ScoreMode::hinge : ScoreMode::plain);
    const Var vh = san_hinge(ad::slice_rows(fh, 0, b * p), ad::slice_rows(fh, b * p, 2 * b * p));
    Var branch = vh;
    Var vw;
    if (san) {
      const Var fw = san_scores(fid, ScoreMode::wass);
      vw = san_wass(ad::slice_rows(fw, 0, b * p), ad::slice_rows(fw, b * p, 2 * b * p));
      branch = ad::add(branch, vw);
    }
    const Var gp = gp_standard(
        [&](const FeatureGrid& f) {
          return mean_over_patches(san_scores(d.fidelity(f, false), ScoreMode::plain), f.batch, p);
        },
        cl_real, cfg);
    total = ad::add(total, ad::sub(branch, gp));
    rec.V_hinge = vh.item();
    rec.V_wass = value_of(vw);
    rec.GP = gp.item();
  }

  if (active.mi) {
    const Var l_mi = mi_loss(batch.z, d.predict_noise(cl_fake));
    total = ad::add(total, ad::scale(l_mi, active.lambda));
    rec.L_MI = l_mi.item();
  }
  rec.D_loss = -total.item();
  return ObjectiveValue{total, rec};
}

ObjectiveValue generator_objective(const Generator& g, const Discriminator& d,
                                   const ImageEncoder& guidance, const PairedBatch& batch,
                                   const LossConfig& cfg, Preset preset) {
  const auto active = check_heads(d, cfg, preset);
  const Var fake = g.generate(batch.z, batch.c_matched);
  const FeatureGrid cl = d.encode(fake);
  const double sign = cfg.generator_sign == GeneratorSign::non_saturating ? -1.0 : 1.0;

  TermRecord rec;
  const Var d_sem = ad::mean(san_scores(d.semantic(cl, batch.c_matched, false), ScoreMode::plain));
  Var total = ad::scale(d_sem, sign);
  if (active.fidelity) {
    const Var d_fid = ad::mean(san_scores(d.fidelity(cl, false), ScoreMode::plain));
    total = ad::add(total, ad::scale(d_fid, sign));
  }
  if (cfg.mu != 0.0) {
    const FeatureGrid for_cs = &guidance == &d.encoder() ? cl : guidance.encode_image(fake);
    const Var cs = clip_guidance(guidance.project(for_cs), batch.c_matched);
    total = ad::sub(total, ad::scale(cs, cfg.mu));
    rec.CS = cs.item();
  }
  if (active.mi && cfg.mi_on_generator) {
    const Var l_mi = mi_loss(batch.z, d.predict_noise(cl));
    total = ad::sub(total, ad::scale(l_mi, active.lambda));
    rec.L_MI = l_mi.item();
  }
  rec.G_loss = total.item();
  return ObjectiveValue{total, rec};
}

}  // namespace scad
