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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scad/encoders.hpp"
#include "scad/generator.hpp"
#include "scad/tensor.hpp"

namespace scad {

/// Parses a norm order: a real >= 1 or "inf".
double parse_norm_order(std::string_view s);
std::string format_norm_order(double p);

struct PPDConfig {
  double p = 10.0;
  int n = 40;
  int k = 1000;

  void validate() const;
};

/// Sum over rows of the p-norm of each row's deviation from the row mean.
/// Rows are used as given (no normalisation).
double ppd(const Tensor& embeddings, double p);

/// Anything that maps noises and a prompt to images [N, S*S*3].
class ImageModel {
 public:
  virtual ~ImageModel() = default;
  virtual int noise_dim() const = 0;
  virtual Tensor sample(const Tensor& z, const std::string& prompt) const = 0;
};

/// Generator plus the text encoder that conditions it.
class GeneratorModel final : public ImageModel {
 public:
  GeneratorModel(const Generator& generator, const TextEncoder& text)
      : generator_(generator), text_(text) {}
  int noise_dim() const override { return generator_.config().d_z; }
  Tensor sample(const Tensor& z, const std::string& prompt) const override;

 private:
  const Generator& generator_;
  const TextEncoder& text_;
};

/// The N noises ppd_for_prompt draws for a prompt under `seed`.
Tensor ppd_noises(int noise_dim, const std::string& prompt, int n, std::uint64_t seed);

/// s(G(z_i, c)) for the N seeded noises of `prompt`.
Tensor prompt_embeddings(const ImageModel& model, const DiversityEmbedder& embedder,
                         const std::string& prompt, int n, std::uint64_t seed);

double ppd_for_prompt(const ImageModel& model, const DiversityEmbedder& embedder,
                      const std::string& prompt, const PPDConfig& cfg, std::uint64_t seed);

struct PPDReport {
  std::vector<std::pair<std::string, double>> per_prompt;
  double mppd = 0.0;
  double stderr_ = 0.0;
  PPDConfig config;
  std::uint64_t seed = 0;
  std::string embedder;

  /// Fills mppd and stderr_ from per_prompt (stderr 0 when K = 1).
  void summarize();
  nlohmann::json to_json() const;
  static PPDReport from_json(const nlohmann::json& j);
};

/// Per-prompt PPD over `prompts` (all of them; cfg.k is the caller's cap).
PPDReport mppd(const ImageModel& model, const DiversityEmbedder& embedder,
               const std::vector<std::string>& prompts, const PPDConfig& cfg, std::uint64_t seed);

/// mppd(a) - mppd(b). PPD sums over N, so differing N is refused unless
/// allow_cross_n is set.
double compare_reports(const PPDReport& a, const PPDReport& b, bool allow_cross_n = false);

struct PSensitivityTable {
  std::vector<std::string> rows;
  std::vector<double> p_values;
  std::vector<std::vector<double>> values;  // [row][p]
  /// Row indices sorted by decreasing PPD, one ordering per p.
  std::vector<std::vector<std::size_t>> rankings;

  bool ranking_stable() const;
  nlohmann::json to_json() const;
};

/// PPD of each embedding set for every p, all computed on the same rows.
PSensitivityTable p_sensitivity(const std::vector<std::string>& names,
                                const std::vector<Tensor>& embedding_sets,
                                const std::vector<double>& p_values);

/// Generates once per prompt, then evaluates every p on those embeddings.
PSensitivityTable p_sensitivity(const ImageModel& model, const DiversityEmbedder& embedder,
                                const std::vector<std::string>& prompts,
                                const std::vector<double>& p_values, const PPDConfig& cfg,
                                std::uint64_t seed);

}  // namespace scad
