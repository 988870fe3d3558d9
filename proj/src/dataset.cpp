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

#include "scad/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "scad/errors.hpp"
#include "scad/image_io.hpp"

namespace scad {

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); }))
      continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("malformed manifest line " + where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image") || !j.contains("caption") ||
        !j["image"].is_string() || !j["caption"].is_string())
      throw InputError("manifest line " + where + " needs string fields 'image' and 'caption'");
    DatasetRecord rec{j["image"].get<std::string>(), j["caption"].get<std::string>()};
    if (tokenize_caption(rec.caption).empty())
      throw InputError("manifest line " + where + " has an empty caption");
    if (rec.image_path.is_relative()) rec.image_path = base / rec.image_path;
    if (!std::filesystem::exists(rec.image_path)) {
      m.warnings.push_back("skipping " + where + ": image " + rec.image_path.string() +
                           " not found");
      continue;
    }
    m.records.push_back(std::move(rec));
  }
  if (line_no == 0 || (m.records.empty() && m.warnings.empty()))
    throw InputError("manifest " + path.string() + " is empty");
  if (m.records.empty()) throw InputError("manifest " + path.string() + " has no usable records");
  return m;
}

Dataset::Dataset(Tensor images, std::vector<std::string> captions, int image_size)
    : images_(std::move(images)), captions_(std::move(captions)), image_size_(image_size) {
  if (images_.rows() != static_cast<std::int64_t>(captions_.size()))
    throw InputError("dataset: image and caption counts differ");
  if (images_.cols() != static_cast<std::int64_t>(image_size) * image_size * 3)
    throw InputError("dataset: images are not " + std::to_string(image_size) + "px RGB rows");
  if (captions_.empty()) throw InputError("dataset: no records");
}

Dataset Dataset::from_manifest(const Manifest& manifest, int image_size,
                               std::vector<std::string>* warnings) {
  std::vector<Tensor> rows;
  std::vector<std::string> captions;
  for (const auto& rec : manifest.records) {
    try {
      rows.push_back(image_to_row(read_png(rec.image_path), image_size));
      captions.push_back(rec.caption);
    } catch (const InputError& e) {
      if (!warnings) throw;
      warnings->push_back(std::string("skipping record: ") + e.what());
    }
  }
  if (rows.empty()) throw InputError("dataset: no decodable images");
  return Dataset(vstack(rows), std::move(captions), image_size);
}

const Tensor& Dataset::embedding(const std::string& caption, const TextEncoder& text) const {
  std::lock_guard lock(cache_->mutex);
  auto& cache = cache_->embeddings;
  auto it = cache.find(caption);
  if (it == cache.end()) it = cache.emplace(caption, text.embed_text(caption).values).first;
  return it->second;
}

std::vector<std::size_t> Dataset::epoch_order(std::uint64_t seed, std::int64_t epoch) const {
  std::vector<std::size_t> order(static_cast<std::size_t>(size()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "epoch:" + std::to_string(epoch)));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)))]);
  return order;
}

std::vector<std::size_t> derangement(std::span<const std::string> captions, Rng& rng) {
  const std::size_t n = captions.size();
  if (n < 2) throw InputError("derangement: need at least 2 items");

  // Sattolo's algorithm: a uniformly random single cycle, never a fixed point.
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(p[i], p[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)))]);

  // Repair equal-caption pairs by swapping targets; stays a derangement.
  auto clash = [&](std::size_t i, std::size_t target) {
    return target == i || captions[i] == captions[target];
  };
  for (std::size_t pass = 0; pass < 4 * n; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!clash(i, p[i])) continue;
      const auto start = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(n)));
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = (start + k) % n;
        if (j == i || clash(i, p[j]) || clash(j, p[i])) continue;
        std::swap(p[i], p[j]);
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }
  return p;
}

HostBatch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                     const TextEncoder& text, int d_z, Rng& rng) {
  const auto b = static_cast<std::int64_t>(indices.size());
  if (b < 2) throw InputError("make_batch: batch size must be at least 2 for mismatched pairs");
  HostBatch out;
  out.indices.assign(indices.begin(), indices.end());
  std::vector<Tensor> real, cm, cx;
  for (auto i : indices) {
    if (i >= static_cast<std::size_t>(data.size())) throw InputError("make_batch: index out of range");
    real.push_back(data.images().row_at(static_cast<std::int64_t>(i)));
    out.captions.push_back(data.captions()[i]);
  }
  out.mismatch = derangement(out.captions, rng);
  for (std::int64_t k = 0; k < b; ++k) {
    out.mismatched_captions.push_back(out.captions[out.mismatch[k]]);
    cm.push_back(data.embedding(out.captions[k], text));
    cx.push_back(data.embedding(out.mismatched_captions[k], text));
  }
  out.real = vstack(real);
  out.c_matched = vstack(cm);
  out.c_mismatched = vstack(cx);
  out.z = rng.normal_tensor(b, d_z);
  return out;
}

std::string slugify(const std::string& text) {
  std::string slug;
  bool dash = false;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      if (dash && !slug.empty()) slug.push_back('-');
      slug.push_back(static_cast<char>(std::tolower(ch)));
      dash = false;
    } else {
      dash = true;
    }
  }
  if (slug.size() > 64) slug.resize(64);
  return slug.empty() ? "prompt" : slug;
}

}  // namespace scad
