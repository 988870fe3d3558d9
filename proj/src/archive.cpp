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

#include "scad/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scad/errors.hpp"
#include "scad/rng.hpp"

namespace scad {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little endian");

namespace {

constexpr char kMagic[8] = {'S', 'C', 'A', 'D', 'A', 'R', 'C', '1'};

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.append(s);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw InputError("archive: truncated data");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::map<std::string, Tensor> Archive::section(const std::string& prefix) const {
  std::map<std::string, Tensor> out;
  const std::string p = prefix + "/";
  for (auto it = tensors.lower_bound(p); it != tensors.end() && it->first.starts_with(p); ++it)
    out.emplace(it->first.substr(p.size()), it->second);
  return out;
}

void Archive::put_section(const std::string& prefix,
                          const std::map<std::string, Tensor>& entries) {
  for (const auto& [name, t] : entries) tensors[prefix + "/" + name] = t;
}

std::string serialize_archive(const Archive& archive) {
  std::string out(kMagic, sizeof(kMagic));
  put_string(out, archive.meta.dump());
  put<std::uint64_t>(out, archive.tensors.size());
  for (const auto& [name, t] : archive.tensors) {
    put_string(out, name);
    put<std::int64_t>(out, t.rows());
    put<std::int64_t>(out, t.cols());
    out.append(reinterpret_cast<const char*>(t.data().data()), t.data().size_bytes());
  }
  put<std::uint64_t>(out, archive.blobs.size());
  for (const auto& [name, blob] : archive.blobs) {
    put_string(out, name);
    put_string(out, blob);
  }
  put<std::uint64_t>(out, fnv1a(out));
  return out;
}

Archive deserialize_archive(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw InputError("archive: bad magic (not a scad archive)");
  const std::string body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (stored != fnv1a(body)) throw InputError("archive: checksum mismatch (corrupted file)");

  Reader in(body);
  char magic[sizeof(kMagic)];
  in.read_raw(magic, sizeof(magic));
  Archive archive;
  try {
    archive.meta = nlohmann::json::parse(in.get_string());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("archive: malformed metadata: ") + e.what());
  }
  const auto n_tensors = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = in.get_string();
    const auto rows = in.get<std::int64_t>();
    const auto cols = in.get<std::int64_t>();
    if (rows < 0 || cols < 0) throw InputError("archive: negative tensor shape");
    std::vector<double> data(static_cast<std::size_t>(rows * cols));
    in.read_raw(data.data(), data.size() * sizeof(double));
    archive.tensors.emplace(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  const auto n_blobs = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_blobs; ++i) {
    std::string name = in.get_string();
    archive.blobs.emplace(std::move(name), in.get_string());
  }
  if (in.position() != body.size()) throw InputError("archive: trailing bytes");
  return archive;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
  const std::string bytes = serialize_archive(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("archive: failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("archive: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_archive(ss.str());
}

}  // namespace scad
