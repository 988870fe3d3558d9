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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "scad/encoders.hpp"
#include "scad/rng.hpp"
#include "scad/tensor.hpp"

namespace scad {

struct DatasetRecord {
  std::filesystem::path image_path;
  std::string caption;
};

struct Manifest {
  std::vector<DatasetRecord> records;
  std::vector<std::string> warnings;
};

/// Reads a JSONL manifest of {"image": path, "caption": text} lines. Image
/// paths are relative to the manifest's directory. Records whose image is
/// missing are dropped with a warning; unreadable, malformed or empty
/// manifests raise InputError.
Manifest load_manifest(const std::filesystem::path& path);

/// Decoded images [N, S*S*3] in [-1, 1] with their captions, plus a lazily
/// filled caption-embedding cache.
class Dataset {
 public:
  Dataset(Tensor images, std::vector<std::string> captions, int image_size);

  /// Decodes every record (centre crop + resize). Undecodable images are
  /// skipped and reported through `warnings`.
  static Dataset from_manifest(const Manifest& manifest, int image_size,
                               std::vector<std::string>* warnings = nullptr);

  std::int64_t size() const noexcept { return images_.rows(); }
  int image_size() const noexcept { return image_size_; }
  const Tensor& images() const noexcept { return images_; }
  const std::vector<std::string>& captions() const noexcept { return captions_; }

  /// c for a caption; computed once per distinct caption.
  const Tensor& embedding(const std::string& caption, const TextEncoder& text) const;

  /// Seeded shuffle of [0, size) for one epoch.
  std::vector<std::size_t> epoch_order(std::uint64_t seed, std::int64_t epoch) const;

 private:
  Tensor images_;
  std::vector<std::string> captions_;
  int image_size_;
  struct Cache {
    std::mutex mutex;
    std::map<std::string, Tensor> embeddings;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Permutation p with p[i] != i. Among those, one that also avoids pairing
/// equal captions is preferred whenever the caption multiset allows it.
std::vector<std::size_t> derangement(std::span<const std::string> captions, Rng& rng);

/// Host-side batch; rows of every tensor align with `indices`.
struct HostBatch {
  std::vector<std::size_t> indices;
  std::vector<std::string> captions;
  std::vector<std::string> mismatched_captions;
  std::vector<std::size_t> mismatch;  // derangement used for the captions
  Tensor real;                        // [B, S*S*3]
  Tensor c_matched;                   // [B, D_c]
  Tensor c_mismatched;                // [B, D_c]
  Tensor z;                           // [B, D_z]
};

/// Gathers `indices`, deranges their captions and draws z ~ N(0, I) from
/// `rng`. Fewer than 2 indices raise InputError.
HostBatch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                     const TextEncoder& text, int d_z, Rng& rng);

/// Slug used in output file names: lower case alphanumerics joined by '-'.
std::string slugify(const std::string& text);

}  // namespace scad
