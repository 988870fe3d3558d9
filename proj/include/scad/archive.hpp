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

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "scad/tensor.hpp"

namespace scad {

/// In-memory form of the single-file checkpoint / weight archive.
///
/// Layout on disk (little endian):
///   "SCADARC1" | u64 meta_len | meta JSON | u64 n_tensors |
///   { u64 name_len | name | i64 rows | i64 cols | f64 data[rows*cols] }* |
///   u64 n_blobs | { u64 name_len | name | u64 len | bytes }* | u64 fnv1a(all preceding bytes)
///
/// Entries are written in name order, so equal archives serialise to equal bytes.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> blobs;

  /// Tensors whose name starts with "<prefix>/", with the prefix removed.
  std::map<std::string, Tensor> section(const std::string& prefix) const;
  void put_section(const std::string& prefix, const std::map<std::string, Tensor>& entries);
};

std::string serialize_archive(const Archive& archive);
Archive deserialize_archive(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place, so an interrupted
/// write never leaves a truncated archive at `path`.
void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

}  // namespace scad
