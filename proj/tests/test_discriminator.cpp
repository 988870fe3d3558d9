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

#include <memory>

#include "scad/discriminator.hpp"
#include "scad/errors.hpp"
#include "scad/rng.hpp"
#include "test_util.hpp"

namespace scad {
namespace {

std::shared_ptr<const ImageEncoder> encoder() {
  static auto enc = std::make_shared<const ImageEncoder>(EncoderSpec{.seed = 3});
  return enc;
}

DiscriminatorConfig small(DiscriminatorVariant v = DiscriminatorVariant::sn_hxc_wc) {
  return DiscriminatorConfig{.variant = v, .d_h = 16, .d_z = 16, .hidden = 8,
                             .direction_hidden = 16, .seed = 2};
}

Tensor images(std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(n, 32 * 32 * 3);
  for (auto& v : t.data()) v = 2.0 * rng.uniform() - 1.0;
  return t;
}

Tensor conditions(std::int64_t n, std::uint64_t seed) { return Rng(seed).normal_tensor(n, 64); }

double normalized_top_sv(const Tensor& w, nn::SpectralNormState& state, bool training) {
  const auto out = nn::spectral_normalize(Var::constant(w), state, training);
  return test::top_singular_value(out.value());
}

nn::SpectralNormState cold_state(const Tensor& w, int n_iters, std::uint64_t seed) {
  Rng rng(seed);
  return nn::make_spectral_norm_state(w, rng, n_iters, /*warmup_iters=*/0);
}

TEST(SpectralNorm, ScaledIdentity) {
  Tensor w = Tensor::identity(5);
  for (auto& v : w.data()) v *= 3.0;
  auto state = cold_state(w, 5, 1);
  EXPECT_NEAR(normalized_top_sv(w, state, true), 1.0, 1e-3);
}

TEST(SpectralNorm, OrthogonalMatrixIsUnchanged) {
  // Householder reflection I - 2 v v^T / |v|^2.
  Rng rng(4);
  const Tensor v = rng.normal_tensor(1, 6);
  double vv = 0.0;
  for (double x : v.data()) vv += x * x;
  Tensor w = Tensor::identity(6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) w(i, j) -= 2.0 * v[i] * v[j] / vv;
  auto state = cold_state(w, 5, 2);
  const auto out = nn::spectral_normalize(Var::constant(w), state, true);
  EXPECT_LT(test::max_abs_diff(out.value(), w), 1e-3);
}

TEST(SpectralNorm, RankOne) {
  Rng rng(5);
  const Tensor a = rng.normal_tensor(1, 7);
  const Tensor b = rng.normal_tensor(1, 4);
  Tensor w(7, 4);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = 2.5 * a[i] * b[j];
  auto state = cold_state(w, 5, 3);
  EXPECT_NEAR(normalized_top_sv(w, state, true), 1.0, 1e-3);
}

TEST(SpectralNorm, ZeroWeightIsANumericError) {
  Tensor w(4, 4);
  nn::SpectralNormState state{Tensor(1, 4, 0.5), 1};
  EXPECT_THROW(nn::spectral_normalize(Var::constant(w), state, true), NumericError);
}

TEST(SpectralNorm, EvaluationModeLeavesStateUntouched) {
  const Tensor w = Rng(6).normal_tensor(8, 8);
  auto state = cold_state(w, 1, 4);
  const Tensor before = state.u;
  nn::spectral_normalize(Var::constant(w), state, false);
  EXPECT_EQ(state.u, before);
  nn::spectral_normalize(Var::constant(w), state, true);
  EXPECT_FALSE(state.u == before);
}

TEST(SpectralNorm, AmortizedIterationTracksExactSigma) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor w = Rng(100 + seed).normal_tensor(64, 64);
    auto state = cold_state(w, 1, seed);
    for (int step = 0; step < 100; ++step) nn::spectral_normalize(Var::constant(w), state, true);
    const double exact = test::top_singular_value(w);
    EXPECT_NEAR(nn::spectral_sigma(w, state) / exact, 1.0, 0.05) << "seed " << seed;
  }
}

TEST(SpectralNorm, GradientMatchesFiniteDifferences) {
  const Tensor w = Rng(7).normal_tensor(5, 3);
  auto state = cold_state(w, 1, 5);
  for (int i = 0; i < 30; ++i) nn::spectral_normalize(Var::constant(w), state, true);
  const Tensor probe = Rng(8).normal_tensor(5, 3);
  // With u held fixed the estimate is sum(W * u v^T); v depends on W too, but
  // at a converged u the first-order effect of v vanishes.
  const double err = test::gradient_error(
      [&](const Var& x) {
        auto s = state;
        return ad::mul(nn::spectral_normalize(x, s, false), Var::constant(probe));
      },
      w);
  EXPECT_LT(err, 1e-4);
}

TEST(Discriminator, UnconditionalFeaturesIgnoreText) {
  Discriminator d(small(DiscriminatorVariant::hx_w), encoder());
  const Var c = Var::leaf(conditions(2, 1));
  const auto cl = d.encode(Var::constant(images(2, 1)));
  const auto g = ad::grad(ad::sum(d.features(cl, c)), {c});
  EXPECT_EQ(g[0].value().max_abs(), 0.0);
  EXPECT_EQ(d.features(cl, c).cols(), 16);
}

TEST(Discriminator, ConditionalFeaturesUseText) {
  Discriminator d(small(), encoder());
  const Var c = Var::leaf(conditions(2, 1));
  const auto cl = d.encode(Var::constant(images(2, 1)));
  const auto g = ad::grad(ad::sum(d.features(cl, c)), {c});
  EXPECT_GT(g[0].value().max_abs(), 0.0);
}

TEST(Discriminator, DirectionIsUnitNormForRandomText) {
  Discriminator d(small(), encoder());
  const Tensor w = d.direction(Var::constant(conditions(1000, 9))).value();
  for (std::int64_t r = 0; r < w.rows(); ++r) {
    double n = 0.0;
    for (std::int64_t j = 0; j < w.cols(); ++j) n += w(r, j) * w(r, j);
    ASSERT_NEAR(std::sqrt(n), 1.0, 1e-5);
  }
  EXPECT_GT(test::max_abs_diff(w.row_at(0), w.row_at(1)), 1e-6);
}

TEST(Discriminator, UnconditionalDirectionIgnoresText) {
  for (auto v : {DiscriminatorVariant::hx_w, DiscriminatorVariant::hxc_w}) {
    Discriminator d(small(v), encoder());
    const Tensor w = d.direction(Var::constant(conditions(3, 9))).value();
    EXPECT_EQ(w.row_at(0), w.row_at(2));
  }
}

TEST(Discriminator, ZeroDirectionIsANumericError) {
  Discriminator d(small(DiscriminatorVariant::hx_w), encoder());
  Var omega = d.parameters().get("semantic/omega/global");
  for (auto& v : omega.mutable_value().data()) v = 0.0;
  EXPECT_THROW(d.direction(Var::constant(conditions(1, 1))), NumericError);
}

TEST(Discriminator, StopGradientSeparation) {
  for (auto v : {DiscriminatorVariant::hxc_wc, DiscriminatorVariant::sn_hxc_wc,
                 DiscriminatorVariant::sn_hxc_sn_wc, DiscriminatorVariant::hxc_w}) {
    Discriminator d(small(v), encoder());
    const auto out = d.semantic(d.encode(Var::constant(images(2, 3))),
                                Var::constant(conditions(2, 4)));
    const auto h_params = d.parameters_under("semantic/h/");
    const auto w_params = d.parameters_under("semantic/omega/");
    const Var hinge = san_scores(out, ScoreMode::hinge);
    const Var wass = san_scores(out, ScoreMode::wass);
    EXPECT_LT(test::max_abs_diff(hinge.value(), wass.value()), 1e-6);
    for (const auto& g : ad::grad(ad::sum(hinge), w_params)) EXPECT_EQ(g.value().max_abs(), 0.0);
    for (const auto& g : ad::grad(ad::sum(wass), h_params)) EXPECT_EQ(g.value().max_abs(), 0.0);
    double reach = 0.0;
    for (const auto& g : ad::grad(ad::sum(hinge), h_params)) reach += g.value().max_abs();
    EXPECT_GT(reach, 0.0) << to_string(v);
  }
}

TEST(Discriminator, FidelityBranchScoresEveryPatch) {
  auto cfg = small();
  cfg.fidelity_branch = true;
  Discriminator d(cfg, encoder());
  EXPECT_EQ(d.patch_count(), 9);
  const Var x = Var::constant(images(2, 5));
  const Var hinge = d.fidelity_scores(x, ScoreMode::hinge);
  const Var wass = d.fidelity_scores(x, ScoreMode::wass);
  EXPECT_EQ(hinge.rows(), 2);
  EXPECT_EQ(hinge.cols(), 9);
  EXPECT_LT(test::max_abs_diff(hinge.value(), wass.value()), 1e-12);
  const auto g = ad::grad(ad::sum(hinge), d.parameters_under("fidelity/omega/"));
  EXPECT_EQ(g[0].value().max_abs(), 0.0);
}

TEST(Discriminator, FidelityBranchAbsentUnlessEnabled) {
  Discriminator d(small(), encoder());
  EXPECT_THROW(d.fidelity_scores(Var::constant(images(1, 5)), ScoreMode::hinge),
               ConfigurationError);
}

TEST(Discriminator, NoisePredictorOnlyWhenEnabled) {
  Discriminator off(small(), encoder());
  EXPECT_THROW(off.predict_noise(Var::constant(images(1, 1))), ConfigurationError);
  auto cfg = small();
  cfg.noise_predictor = true;
  Discriminator on(cfg, encoder());
  const Tensor z = on.predict_noise(Var::constant(images(3, 1))).value();
  EXPECT_EQ(z.rows(), 3);
  EXPECT_EQ(z.cols(), 16);
  EXPECT_EQ(z, on.predict_noise(Var::constant(images(3, 1))).value());
}

TEST(Discriminator, VariantNamesRoundTrip) {
  for (auto v : {DiscriminatorVariant::hx_w, DiscriminatorVariant::hxc_w,
                 DiscriminatorVariant::hxc_wc, DiscriminatorVariant::sn_hxc_sn_wc,
                 DiscriminatorVariant::sn_hxc_wc})
    EXPECT_EQ(discriminator_variant_from_string(to_string(v)), v);
  EXPECT_THROW(discriminator_variant_from_string("hxw"), ConfigurationError);
}

}  // namespace
}  // namespace scad
