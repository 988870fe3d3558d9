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

#include "scad/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "scad/errors.hpp"
#include "scad/image_io.hpp"

namespace scad {

namespace {
struct Colour {
  const char* name;
  double rgb[3];
};
constexpr Colour kPalette[] = {
    {"red", {1.0, -1.0, -1.0}},
    {"blue", {-1.0, -1.0, 1.0}},
    {"green", {-1.0, 1.0, -1.0}},
    {"yellow", {1.0, 1.0, -1.0}},
};
}  // namespace

ModeDataset make_mode_dataset(int classes, int image_size) {
  if (classes < 1 || classes > 4) throw InputError("mode dataset: 1 to 4 classes");
  if (image_size % 4 != 0) throw InputError("mode dataset: image size must be a multiple of 4");
  ModeDataset set;
  set.image_size = image_size;
  const int half = image_size / 2;
  const int margin = image_size / 16;
  for (int k = 0; k < classes; ++k) {
    set.captions.push_back(std::string("a ") + kPalette[k].name + " square");
    std::vector<Tensor> modes;
    for (int m = 0; m < 4; ++m) {
      Tensor t(1, static_cast<std::int64_t>(image_size) * image_size * 3, -1.0);
      const int ox = (m % 2) * half, oy = (m / 2) * half;
      for (int y = oy + margin; y < oy + half - margin; ++y)
        for (int x = ox + margin; x < ox + half - margin; ++x)
          for (int ch = 0; ch < 3; ++ch)
            t[(static_cast<std::int64_t>(y) * image_size + x) * 3 + ch] = kPalette[k].rgb[ch];
      modes.push_back(std::move(t));
    }
    set.templates.push_back(std::move(modes));
  }
  return set;
}

Dataset ModeDataset::sample(int samples_per_mode, double noise, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<Tensor> rows;
  std::vector<std::string> caps;
  for (std::size_t k = 0; k < templates.size(); ++k)
    for (const auto& t : templates[k])
      for (int i = 0; i < samples_per_mode; ++i) {
        Tensor row = t;
        for (auto& v : row.data()) v = std::clamp(v + noise * rng.normal(), -1.0, 1.0);
        rows.push_back(std::move(row));
        caps.push_back(captions[k]);
      }
  return Dataset(vstack(rows), std::move(caps), image_size);
}

std::filesystem::path ModeDataset::write(const std::filesystem::path& dir, int samples_per_mode,
                                         double noise, std::uint64_t seed) const {
  const Dataset data = sample(samples_per_mode, noise, seed);
  std::filesystem::create_directories(dir / "images");
  const auto manifest = dir / "manifest.jsonl";
  std::ofstream out(manifest);
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const std::string name = "images/" + std::to_string(i) + ".png";
    write_png(dir / name, row_to_image(data.images().row_at(i), image_size));
    out << nlohmann::json{{"image", name}, {"caption", data.captions()[i]}}.dump() << '\n';
  }
  return manifest;
}

int count_recovered_modes(const Tensor& images, const ModeDataset& set, int class_index,
                          int min_hits) {
  if (class_index < 0 || class_index >= static_cast<int>(set.templates.size()))
    throw InputError("count_recovered_modes: class index out of range");
  std::vector<int> hits(set.templates[class_index].size(), 0);
  for (std::int64_t r = 0; r < images.rows(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    int best_class = -1, best_mode = -1;
    for (std::size_t k = 0; k < set.templates.size(); ++k)
      for (std::size_t m = 0; m < set.templates[k].size(); ++m) {
        const Tensor& t = set.templates[k][m];
        double d = 0.0;
        for (std::int64_t j = 0; j < t.size(); ++j) d += (images(r, j) - t[j]) * (images(r, j) - t[j]);
        if (d < best) {
          best = d;
          best_class = static_cast<int>(k);
          best_mode = static_cast<int>(m);
        }
      }
    if (best_class == class_index) ++hits[best_mode];
  }
  return static_cast<int>(std::count_if(hits.begin(), hits.end(), [&](int h) { return h >= min_hits; }));
}

}  // namespace scad
