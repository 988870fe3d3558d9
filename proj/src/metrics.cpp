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

#include "scad/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "scad/errors.hpp"
#include "scad/rng.hpp"

namespace scad {

double parse_norm_order(std::string_view s) {
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double p = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigurationError("norm order '" + std::string(s) + "' is not a number or 'inf'");
  if (!(p >= 1.0)) throw ConfigurationError("norm order must be >= 1");
  return p;
}

std::string format_norm_order(double p) {
  if (std::isinf(p)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

void PPDConfig::validate() const {
  if (!(p >= 1.0)) throw ConfigurationError("ppd: p must be >= 1 or inf");
  if (n < 2) throw ConfigurationError("ppd: N must be at least 2");
  if (k < 1) throw ConfigurationError("ppd: K must be at least 1");
}

double ppd(const Tensor& emb, double p) {
  if (emb.rows() < 2) throw InputError("ppd: need at least 2 embeddings, got " +
                                       std::to_string(emb.rows()));
  if (!(p >= 1.0)) throw InputError("ppd: p must be >= 1 or inf");
  for (std::int64_t r = 0; r < emb.rows(); ++r)
    for (std::int64_t j = 0; j < emb.cols(); ++j)
      if (!std::isfinite(emb(r, j)))
        throw InputError("ppd: non-finite embedding in row " + std::to_string(r));
  const auto n = emb.rows();
  // Mean taken about the first row, so identical rows give exactly zero.
  std::vector<double> mean(static_cast<std::size_t>(emb.cols()), 0.0);
  for (std::int64_t r = 1; r < n; ++r)
    for (std::int64_t j = 0; j < emb.cols(); ++j) mean[j] += emb(r, j) - emb(0, j);
  for (std::int64_t j = 0; j < emb.cols(); ++j) mean[j] = emb(0, j) + mean[j] / static_cast<double>(n);

  double total = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    // Scale by the largest deviation so high p does not overflow.
    double big = 0.0;
    for (std::int64_t j = 0; j < emb.cols(); ++j) big = std::max(big, std::abs(emb(r, j) - mean[j]));
    if (big == 0.0) continue;
    if (std::isinf(p)) {
      total += big;
      continue;
    }
    double acc = 0.0;
    for (std::int64_t j = 0; j < emb.cols(); ++j) acc += std::pow(std::abs(emb(r, j) - mean[j]) / big, p);
    total += big * std::pow(acc, 1.0 / p);
  }
  return total;
}

Tensor GeneratorModel::sample(const Tensor& z, const std::string& prompt) const {
  ad::NoGradGuard guard;
  const Var c = Var::constant(text_.embed_text(prompt).values);
  return generator_.generate(Var::constant(z), c).value();
}

Tensor ppd_noises(int noise_dim, const std::string& prompt, int n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "ppd:" + prompt));
  return rng.normal_tensor(n, noise_dim);
}

Tensor prompt_embeddings(const ImageModel& model, const DiversityEmbedder& embedder,
                         const std::string& prompt, int n, std::uint64_t seed) {
  return embedder.embed(model.sample(ppd_noises(model.noise_dim(), prompt, n, seed), prompt));
}

double ppd_for_prompt(const ImageModel& model, const DiversityEmbedder& embedder,
                      const std::string& prompt, const PPDConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return ppd(prompt_embeddings(model, embedder, prompt, cfg.n, seed), cfg.p);
}

void PPDReport::summarize() {
  const auto k = per_prompt.size();
  if (k == 0) throw InputError("mppd: empty prompt list");
  double sum = 0.0;
  for (const auto& [_, v] : per_prompt) sum += v;
  mppd = sum / static_cast<double>(k);
  if (k == 1) {
    stderr_ = 0.0;
    return;
  }
  double ss = 0.0;
  for (const auto& [_, v] : per_prompt) ss += (v - mppd) * (v - mppd);
  stderr_ = std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
}

nlohmann::json PPDReport::to_json() const {
  nlohmann::json j;
  j["per_prompt"] = nlohmann::json::array();
  for (const auto& [prompt, v] : per_prompt)
    j["per_prompt"].push_back({{"prompt", prompt}, {"ppd", v}});
  j["mppd"] = mppd;
  j["stderr"] = stderr_;
  j["config"] = {{"p", format_norm_order(config.p)},
                 {"N", config.n},
                 {"K", config.k},
                 {"seed", seed},
                 {"embedder", embedder}};
  return j;
}

PPDReport PPDReport::from_json(const nlohmann::json& j) {
  PPDReport r;
  try {
    for (const auto& row : j.at("per_prompt"))
      r.per_prompt.emplace_back(row.at("prompt").get<std::string>(), row.at("ppd").get<double>());
    r.mppd = j.at("mppd").get<double>();
    r.stderr_ = j.at("stderr").get<double>();
    const auto& c = j.at("config");
    r.config.p = parse_norm_order(c.at("p").get<std::string>());
    r.config.n = c.at("N").get<int>();
    r.config.k = c.at("K").get<int>();
    r.seed = c.at("seed").get<std::uint64_t>();
    r.embedder = c.at("embedder").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed PPD report: ") + e.what());
  }
  return r;
}

PPDReport mppd(const ImageModel& model, const DiversityEmbedder& embedder,
               const std::vector<std::string>& prompts, const PPDConfig& cfg, std::uint64_t seed) {
  if (prompts.empty()) throw InputError("mppd: empty prompt list");
  cfg.validate();
  PPDReport report;
  report.config = cfg;
  report.config.k = static_cast<int>(prompts.size());
  report.seed = seed;
  report.embedder = embedder.label();
  for (const auto& prompt : prompts)
    report.per_prompt.emplace_back(prompt, ppd_for_prompt(model, embedder, prompt, cfg, seed));
  report.summarize();
  return report;
}

double compare_reports(const PPDReport& a, const PPDReport& b, bool allow_cross_n) {
  if (a.config.n != b.config.n && !allow_cross_n)
    throw ConfigurationError("PPD reports use different N (" + std::to_string(a.config.n) +
                             " vs " + std::to_string(b.config.n) + "); values are not comparable");
  return a.mppd - b.mppd;
}

bool PSensitivityTable::ranking_stable() const {
  return std::all_of(rankings.begin(), rankings.end(),
                     [&](const auto& r) { return r == rankings.front(); });
}

nlohmann::json PSensitivityTable::to_json() const {
  nlohmann::json j;
  std::vector<std::string> ps;
  for (double p : p_values) ps.push_back(format_norm_order(p));
  j["p"] = ps;
  for (std::size_t i = 0; i < rows.size(); ++i) j["rows"].push_back({{"name", rows[i]}, {"ppd", values[i]}});
  j["rankings"] = rankings;
  j["ranking_stable"] = ranking_stable();
  return j;
}

PSensitivityTable p_sensitivity(const std::vector<std::string>& names,
                                const std::vector<Tensor>& embedding_sets,
                                const std::vector<double>& p_values) {
  if (p_values.size() < 2) throw InputError("p_sensitivity: need at least two p values");
  if (names.size() != embedding_sets.size() || names.empty())
    throw InputError("p_sensitivity: one name per embedding set required");
  PSensitivityTable t{names, p_values, {}, {}};
  for (const auto& emb : embedding_sets) {
    std::vector<double> row;
    for (double p : p_values) row.push_back(ppd(emb, p));
    t.values.push_back(std::move(row));
  }
  for (std::size_t pi = 0; pi < p_values.size(); ++pi) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return t.values[a][pi] > t.values[b][pi]; });
    t.rankings.push_back(std::move(order));
  }
  return t;
}

PSensitivityTable p_sensitivity(const ImageModel& model, const DiversityEmbedder& embedder,
                                const std::vector<std::string>& prompts,
                                const std::vector<double>& p_values, const PPDConfig& cfg,
                                std::uint64_t seed) {
  if (p_values.size() < 2) throw InputError("p_sensitivity: need at least two p values");
  cfg.validate();
  std::vector<Tensor> sets;
  for (const auto& prompt : prompts) sets.push_back(prompt_embeddings(model, embedder, prompt, cfg.n, seed));
  return p_sensitivity(prompts, sets, p_values);
}

}  // namespace scad
