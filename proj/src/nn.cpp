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

#include "scad/nn.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <mutex>
#include <tuple>

#include "scad/errors.hpp"

namespace scad::nn {

Var ParameterStore::add(const std::string& name, Tensor init, bool trainable) {
  if (params_.contains(name) || buffers_.contains(name))
    throw ConfigurationError("duplicate parameter name: " + name);
  Var v = trainable ? Var::leaf(std::move(init)) : Var::constant(std::move(init));
  params_.emplace(name, v);
  return v;
}

std::shared_ptr<Tensor> ParameterStore::add_buffer(const std::string& name, Tensor init) {
  if (params_.contains(name) || buffers_.contains(name))
    throw ConfigurationError("duplicate buffer name: " + name);
  auto ptr = std::make_shared<Tensor>(std::move(init));
  buffers_.emplace(name, ptr);
  return ptr;
}

Var ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InputError("unknown parameter: " + name);
  return it->second;
}

std::shared_ptr<Tensor> ParameterStore::buffer(const std::string& name) const {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw InputError("unknown buffer: " + name);
  return it->second;
}

std::vector<Var> ParameterStore::vars() const {
  std::vector<Var> out;
  out.reserve(params_.size());
  for (const auto& [_, v] : params_) out.push_back(v);
  return out;
}

std::int64_t ParameterStore::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

namespace {
std::uint64_t hash_tensor(const std::string& name, const Tensor& t, std::uint64_t h) {
  h = fnv1a(name, h);
  const auto* bytes = reinterpret_cast<const char*>(t.data().data());
  return fnv1a(std::string_view(bytes, t.data().size_bytes()), h);
}
}  // namespace

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = fnv1a(namespace_);
  for (const auto& [name, v] : params_) h = hash_tensor(name, v.value(), h);
  for (const auto& [name, b] : buffers_) h = hash_tensor(name, *b, h);
  return h;
}

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void normalize_in_place(Tensor& x) {
  const double n = std::max(norm2(x.data()), kNormEps);
  for (auto& v : x.data()) v /= n;
}

// One power-iteration half step pair: v = normalize(u W), u = normalize(v W^T).
void power_iterate(const Tensor& w, Tensor& u, Tensor& v) {
  v = Tensor(1, w.cols());
  kernels::matmul(u, false, w, false, v);
  normalize_in_place(v);
  kernels::matmul(v, false, w, true, u);
  normalize_in_place(u);
}

Tensor right_vector(const Tensor& w, const Tensor& u) {
  Tensor v(1, w.cols());
  kernels::matmul(u, false, w, false, v);
  normalize_in_place(v);
  return v;
}

double bilinear(const Tensor& u, const Tensor& w, const Tensor& v) {
  Tensor wv(1, w.rows());
  kernels::matmul(v, false, w, true, wv);
  double s = 0.0;
  for (std::int64_t i = 0; i < w.rows(); ++i) s += u[i] * wv[i];
  return s;
}

}  // namespace

SpectralNormState make_spectral_norm_state(const Tensor& weight, Rng& rng, int n_iters,
                                           int warmup_iters) {
  if (n_iters < 1) throw InputError("spectral norm: n_iters must be >= 1");
  SpectralNormState state{rng.normal_tensor(1, weight.rows()), n_iters};
  normalize_in_place(state.u);
  Tensor v;
  for (int i = 0; i < warmup_iters; ++i) power_iterate(weight, state.u, v);
  return state;
}

double spectral_sigma(const Tensor& weight, const SpectralNormState& state) {
  const Tensor v = right_vector(weight, state.u);
  return bilinear(state.u, weight, v);
}

Var spectral_normalize(const Var& weight, SpectralNormState& state, bool training) {
  if (state.n_iters < 1) throw InputError("spectral norm: n_iters must be >= 1");
  const Tensor& w = weight.value();
  if (state.u.cols() != w.rows()) throw InputError("spectral norm: state does not match weight");
  Tensor v;
  if (training) {
    for (int i = 0; i < state.n_iters; ++i) power_iterate(w, state.u, v);
    v = right_vector(w, state.u);
  } else {
    v = right_vector(w, state.u);
  }
  const double sigma = bilinear(state.u, w, v);
  if (!(sigma > kNormEps)) {
    throw NumericError("spectral norm: singular value estimate " + std::to_string(sigma) +
                       " is below the floor (zero weight?)");
  }
  Tensor outer(w.rows(), w.cols());
  for (std::int64_t i = 0; i < w.rows(); ++i)
    for (std::int64_t j = 0; j < w.cols(); ++j) outer(i, j) = state.u[i] * v[j];
  const Var sigma_var = ad::sum(ad::mul(weight, Var::constant(std::move(outer))));
  return ad::mul(weight,
                 ad::broadcast_scalar(ad::pow_scalar(sigma_var, -1.0), w.rows(), w.cols()));
}

Linear::Linear(ParameterStore& store, const std::string& prefix, std::int64_t in,
               std::int64_t out, Rng& rng, LinearOptions options)
    : in_(in), out_(out) {
  const double stddev = options.gain / std::sqrt(static_cast<double>(in));
  weight_ = store.add(prefix + "/weight", rng.normal_tensor(in, out, stddev), options.trainable);
  if (options.bias) bias_ = store.add(prefix + "/bias", Tensor::zeros(1, out), options.trainable);
  if (options.spectral_norm) {
    auto state = make_spectral_norm_state(weight_.value(), rng);
    sn_u_ = store.add_buffer(prefix + "/sn_u", state.u);
    sn_ = std::make_shared<SpectralNormState>(std::move(state));
  }
}

Var Linear::effective_weight(bool training) const {
  if (!sn_) return weight_;
  // The store buffer is authoritative so checkpoint loads take effect.
  sn_->u = *sn_u_;
  Var w = spectral_normalize(weight_, *sn_, training);
  *sn_u_ = sn_->u;
  return w;
}

Var Linear::forward(const Var& x, bool training) const {
  if (x.cols() != in_) {
    throw InputError("Linear: expected " + std::to_string(in_) + " input features, got " +
                     std::to_string(x.cols()));
  }
  Var y = ad::matmul(x, effective_weight(training));
  if (bias_.defined()) y = ad::add_row(y, bias_);
  return y;
}

namespace {

using MapKey = std::tuple<int, std::int64_t, std::int64_t, std::int64_t, std::int64_t,
                          std::int64_t, std::int64_t, std::int64_t>;

std::shared_ptr<const kernels::IndexMap> cached_map(
    const MapKey& key, const std::function<std::shared_ptr<const kernels::IndexMap>()>& build) {
  static std::mutex mutex;
  static std::map<MapKey, std::shared_ptr<const kernels::IndexMap>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto map = build();
  cache.emplace(key, map);
  return map;
}

}  // namespace

std::shared_ptr<const kernels::IndexMap> im2col_map(std::int64_t batch, std::int64_t h,
                                                    std::int64_t w, std::int64_t c, std::int64_t k,
                                                    std::int64_t stride, std::int64_t pad) {
  return cached_map({0, batch, h, w, c, k, stride, pad}, [=] {
    const auto ho = conv_out_size(h, k, stride, pad);
    const auto wo = conv_out_size(w, k, stride, pad);
    if (ho <= 0 || wo <= 0) throw InputError("conv: kernel larger than input");
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * ho * wo * k * k * c));
    std::size_t t = 0;
    for (std::int64_t b = 0; b < batch; ++b)
      for (std::int64_t oy = 0; oy < ho; ++oy)
        for (std::int64_t ox = 0; ox < wo; ++ox)
          for (std::int64_t ky = 0; ky < k; ++ky)
            for (std::int64_t kx = 0; kx < k; ++kx) {
              const auto iy = oy * stride - pad + ky;
              const auto ix = ox * stride - pad + kx;
              const bool inside = iy >= 0 && iy < h && ix >= 0 && ix < w;
              for (std::int64_t ch = 0; ch < c; ++ch)
                idx[t++] = inside ? ((b * h + iy) * w + ix) * c + ch : -1;
            }
    return std::make_shared<const kernels::IndexMap>(batch * h * w * c, std::move(idx));
  });
}

std::shared_ptr<const kernels::IndexMap> upsample2x_map(std::int64_t batch, std::int64_t h,
                                                        std::int64_t w, std::int64_t c) {
  return cached_map({1, batch, h, w, c, 0, 0, 0}, [=] {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * 4 * h * w * c));
    std::size_t t = 0;
    for (std::int64_t b = 0; b < batch; ++b)
      for (std::int64_t y = 0; y < 2 * h; ++y)
        for (std::int64_t x = 0; x < 2 * w; ++x)
          for (std::int64_t ch = 0; ch < c; ++ch)
            idx[t++] = ((b * h + y / 2) * w + x / 2) * c + ch;
    return std::make_shared<const kernels::IndexMap>(batch * h * w * c, std::move(idx));
  });
}

std::shared_ptr<const kernels::IndexMap> patchify_map(std::int64_t batch, std::int64_t size,
                                                      std::int64_t c, std::int64_t patch) {
  return cached_map({2, batch, size, c, patch, 0, 0, 0}, [=] {
    if (patch <= 0 || size % patch != 0) throw InputError("patchify: size not divisible by patch");
    const auto g = size / patch;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * size * size * c));
    std::size_t t = 0;
    for (std::int64_t b = 0; b < batch; ++b)
      for (std::int64_t py = 0; py < g; ++py)
        for (std::int64_t px = 0; px < g; ++px)
          for (std::int64_t dy = 0; dy < patch; ++dy)
            for (std::int64_t dx = 0; dx < patch; ++dx)
              for (std::int64_t ch = 0; ch < c; ++ch)
                idx[t++] = b * size * size * c +
                           ((py * patch + dy) * size + (px * patch + dx)) * c + ch;
    return std::make_shared<const kernels::IndexMap>(batch * size * size * c, std::move(idx));
  });
}

Conv2d::Conv2d(ParameterStore& store, const std::string& prefix, std::int64_t in_channels,
               std::int64_t out_channels, std::int64_t kernel, std::int64_t stride,
               std::int64_t pad, Rng& rng, LinearOptions options)
    : in_channels_(in_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      linear_(store, prefix, kernel * kernel * in_channels, out_channels, rng, options) {}

Var Conv2d::forward(const Var& x, std::int64_t batch, std::int64_t h, std::int64_t w,
                    bool training) const {
  if (x.rows() != batch * h * w || x.cols() != in_channels_)
    throw InputError("Conv2d: input " + x.value().shape_string() + " does not match layout");
  if (kernel_ == 1 && stride_ == 1 && pad_ == 0) return linear_.forward(x, training);
  const auto ho = conv_out_size(h, kernel_, stride_, pad_);
  const auto wo = conv_out_size(w, kernel_, stride_, pad_);
  auto map = im2col_map(batch, h, w, in_channels_, kernel_, stride_, pad_);
  const Var cols = ad::gather(x, map, batch * ho * wo, kernel_ * kernel_ * in_channels_);
  return linear_.forward(cols, training);
}

Var upsample2x(const Var& x, std::int64_t batch, std::int64_t h, std::int64_t w) {
  const auto c = x.cols();
  return ad::gather(x, upsample2x_map(batch, h, w, c), batch * 4 * h * w, c);
}

namespace {

std::shared_ptr<const kernels::IndexMap> repeat_rows_map(std::int64_t b, std::int64_t t,
                                                         std::int64_t c) {
  return cached_map({3, b, t, c, 0, 0, 0, 0}, [=] {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(b * t * c));
    std::size_t k = 0;
    for (std::int64_t i = 0; i < b; ++i)
      for (std::int64_t j = 0; j < t; ++j)
        for (std::int64_t ch = 0; ch < c; ++ch) idx[k++] = i * c + ch;
    return std::make_shared<const kernels::IndexMap>(b * c, std::move(idx));
  });
}

std::shared_ptr<const kernels::IndexMap> tile_rows_map(std::int64_t t, std::int64_t c,
                                                       std::int64_t times) {
  return cached_map({4, t, c, times, 0, 0, 0, 0}, [=] {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(times * t * c));
    std::size_t k = 0;
    for (std::int64_t i = 0; i < times; ++i)
      for (std::int64_t j = 0; j < t * c; ++j) idx[k++] = j;
    return std::make_shared<const kernels::IndexMap>(t * c, std::move(idx));
  });
}

}  // namespace

Var repeat_rows(const Var& x, std::int64_t times) {
  return ad::gather(x, repeat_rows_map(x.rows(), times, x.cols()), x.rows() * times, x.cols());
}

Var tile_rows(const Var& x, std::int64_t times) {
  return ad::gather(x, tile_rows_map(x.rows(), x.cols(), times), x.rows() * times, x.cols());
}

Var segment_mean(const Var& x, std::int64_t segment) {
  if (segment <= 0 || x.rows() % segment != 0)
    throw InputError("segment_mean: row count is not a multiple of the segment length");
  const auto b = x.rows() / segment;
  const Var sums = ad::scatter_add(x, repeat_rows_map(b, segment, x.cols()), b, x.cols());
  return ad::scale(sums, 1.0 / static_cast<double>(segment));
}

Adam::Adam(const ParameterStore& store, AdamOptions options) : options_(options) {
  for (const auto& [name, v] : store.parameters()) {
    names_.push_back(name);
    params_.push_back(v);
    m_.push_back(Tensor::zeros(v.rows(), v.cols()));
    v_.push_back(Tensor::zeros(v.rows(), v.cols()));
  }
}

void Adam::step(std::span<const Var> grads) {
  if (grads.size() != params_.size()) throw InputError("Adam: gradient count mismatch");
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor& g = grads[i].value();
    Tensor& p = params_[i].mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    const auto n = p.size();
    for (std::int64_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

std::map<std::string, Tensor> Adam::state() const {
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out.emplace(names_[i] + "/m", m_[i]);
    out.emplace(names_[i] + "/v", v_[i]);
  }
  out.emplace("step", Tensor::scalar(static_cast<double>(t_)));
  return out;
}

void Adam::load_state(const std::map<std::string, Tensor>& state) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    auto m = state.find(names_[i] + "/m");
    auto v = state.find(names_[i] + "/v");
    if (m == state.end() || v == state.end() || !m->second.same_shape(m_[i]) ||
        !v->second.same_shape(v_[i]))
      throw InputError("Adam: optimizer state missing or malformed for " + names_[i]);
    m_[i] = m->second;
    v_[i] = v->second;
  }
  auto s = state.find("step");
  if (s == state.end()) throw InputError("Adam: optimizer state has no step counter");
  t_ = static_cast<std::int64_t>(s->second[0]);
}

}  // namespace scad::nn
