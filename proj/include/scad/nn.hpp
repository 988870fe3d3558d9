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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scad/autodiff.hpp"
#include "scad/rng.hpp"
#include "scad/tensor.hpp"

namespace scad::nn {

using ad::Var;

/// Named trainable tensors plus non-trainable buffers of one network.
///
/// Names are slash-separated paths ("dec1/fc0/weight"); iteration is in
/// name order, which fixes both the optimiser layout and the checkpoint
/// byte stream.
class ParameterStore {
 public:
  explicit ParameterStore(std::string ns = {}) : namespace_(std::move(ns)) {}

  const std::string& name_space() const noexcept { return namespace_; }

  /// Frozen (trainable = false) tensors are graph constants: no gradient
  /// ever reaches them.
  Var add(const std::string& name, Tensor init, bool trainable = true);
  std::shared_ptr<Tensor> add_buffer(const std::string& name, Tensor init);

  bool contains(const std::string& name) const { return params_.contains(name); }
  Var get(const std::string& name) const;
  std::shared_ptr<Tensor> buffer(const std::string& name) const;

  const std::map<std::string, Var>& parameters() const noexcept { return params_; }
  const std::map<std::string, std::shared_ptr<Tensor>>& buffers() const noexcept {
    return buffers_;
  }
  std::vector<Var> vars() const;
  std::int64_t parameter_count() const;

  /// FNV-1a over names and raw bytes of every parameter and buffer.
  std::uint64_t checksum() const;

 private:
  std::string namespace_;
  std::map<std::string, Var> params_;
  std::map<std::string, std::shared_ptr<Tensor>> buffers_;
};

/// Power-iteration state for one spectrally normalised weight.
struct SpectralNormState {
  Tensor u;  // [1, rows], unit norm
  int n_iters = 1;
};

inline constexpr double kNormEps = 1e-12;
/// Iterations run once when a state is created, before any forward pass.
inline constexpr int kSpectralWarmupIters = 15;

/// Fresh state with a random unit u, warmed up on `weight`.
SpectralNormState make_spectral_norm_state(const Tensor& weight, Rng& rng, int n_iters = 1,
                                           int warmup_iters = kSpectralWarmupIters);

/// weight / sigma_hat, where sigma_hat is the power-iteration estimate of the
/// largest singular value. Training mode advances `state` by n_iters
/// iterations first; evaluation mode leaves it untouched. The gradient flows
/// through sigma_hat with u and v held constant.
Var spectral_normalize(const Var& weight, SpectralNormState& state, bool training);

/// Current sigma_hat for `weight` under `state` (no iteration).
double spectral_sigma(const Tensor& weight, const SpectralNormState& state);

struct LinearOptions {
  bool bias = true;
  bool spectral_norm = false;
  double gain = 1.0;
  bool trainable = true;
};

/// y = x W + b with W stored [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, std::int64_t in, std::int64_t out,
         Rng& rng, LinearOptions options = {});

  /// Training mode advances the spectral-norm power iteration.
  Var forward(const Var& x, bool training = false) const;
  Var effective_weight(bool training = false) const;

  std::int64_t in_features() const noexcept { return in_; }
  std::int64_t out_features() const noexcept { return out_; }
  const Var& weight() const noexcept { return weight_; }
  const Var& bias() const noexcept { return bias_; }
  bool spectral() const noexcept { return sn_ != nullptr; }
  const std::shared_ptr<SpectralNormState>& sn_state() const noexcept { return sn_; }

 private:
  std::int64_t in_ = 0;
  std::int64_t out_ = 0;
  Var weight_;
  Var bias_;
  std::shared_ptr<SpectralNormState> sn_;
  std::shared_ptr<Tensor> sn_u_;
};

// Index maps for NHWC layouts, cached process-wide.

/// [B*H*W, C] -> [B*Ho*Wo, k*k*C] patches (zero padded).
std::shared_ptr<const kernels::IndexMap> im2col_map(std::int64_t batch, std::int64_t h,
                                                    std::int64_t w, std::int64_t c, std::int64_t k,
                                                    std::int64_t stride, std::int64_t pad);
/// Nearest-neighbour x2: [B*H*W, C] -> [B*2H*2W, C].
std::shared_ptr<const kernels::IndexMap> upsample2x_map(std::int64_t batch, std::int64_t h,
                                                        std::int64_t w, std::int64_t c);
/// Non-overlapping p x p patches of [B, S*S*C] images -> [B*(S/p)^2, p*p*C].
std::shared_ptr<const kernels::IndexMap> patchify_map(std::int64_t batch, std::int64_t size,
                                                      std::int64_t c, std::int64_t patch);

inline std::int64_t conv_out_size(std::int64_t in, std::int64_t k, std::int64_t stride,
                                  std::int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

/// Convolution as im2col + Linear over NHWC feature maps.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& prefix, std::int64_t in_channels,
         std::int64_t out_channels, std::int64_t kernel, std::int64_t stride, std::int64_t pad,
         Rng& rng, LinearOptions options = {});

  /// x: [B*H*W, Cin] -> [B*Ho*Wo, Cout]
  Var forward(const Var& x, std::int64_t batch, std::int64_t h, std::int64_t w,
              bool training = false) const;

  std::int64_t kernel() const noexcept { return kernel_; }
  std::int64_t stride() const noexcept { return stride_; }
  std::int64_t pad() const noexcept { return pad_; }
  const Linear& linear() const noexcept { return linear_; }

 private:
  std::int64_t in_channels_ = 0;
  std::int64_t kernel_ = 1;
  std::int64_t stride_ = 1;
  std::int64_t pad_ = 0;
  Linear linear_;
};

Var upsample2x(const Var& x, std::int64_t batch, std::int64_t h, std::int64_t w);

/// [B, C] -> [B*T, C], each row repeated T times consecutively.
Var repeat_rows(const Var& x, std::int64_t times);
/// [T, C] -> [B*T, C], the whole block stacked B times.
Var tile_rows(const Var& x, std::int64_t times);
/// [B*T, C] -> [B, C], mean over each run of T consecutive rows.
Var segment_mean(const Var& x, std::int64_t segment);

inline constexpr double kLeakySlope = 0.2;

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Adam over a fixed, name-ordered parameter list. step() descends.
class Adam {
 public:
  Adam() = default;
  Adam(const ParameterStore& store, AdamOptions options);

  void step(std::span<const Var> grads);

  const AdamOptions& options() const noexcept { return options_; }
  std::int64_t steps() const noexcept { return t_; }

  /// Moments keyed "<param>/m", "<param>/v" plus "step".
  std::map<std::string, Tensor> state() const;
  void load_state(const std::map<std::string, Tensor>& state);

 private:
  AdamOptions options_;
  std::vector<std::string> names_;
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace scad::nn
