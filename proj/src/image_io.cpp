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

#include "scad/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "scad/errors.hpp"

namespace scad {

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw InputError("cannot read PNG " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw InputError("write_png: inconsistent image buffer");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.rgb.data(), 0, nullptr))
    throw InputError("cannot write PNG " + path.string() + ": " + png.message);
}

Tensor image_to_row(const Image& image, int size) {
  if (image.width <= 0 || image.height <= 0) throw InputError("image_to_row: empty image");
  const int side = std::min(image.width, image.height);
  const int x0 = (image.width - side) / 2;
  const int y0 = (image.height - side) / 2;
  const double scale = static_cast<double>(side) / size;
  Tensor row(1, static_cast<std::int64_t>(size) * size * 3);
  auto at = [&](int x, int y, int ch) {
    x = std::clamp(x, 0, side - 1);
    y = std::clamp(y, 0, side - 1);
    return static_cast<double>(image.rgb[(static_cast<std::size_t>(y0 + y) * image.width + x0 + x) * 3 + ch]);
  };
  for (int y = 0; y < size; ++y) {
    // Pixel-centre sampling.
    const double sy = (y + 0.5) * scale - 0.5;
    const int iy = static_cast<int>(std::floor(sy));
    const double fy = sy - iy;
    for (int x = 0; x < size; ++x) {
      const double sx = (x + 0.5) * scale - 0.5;
      const int ix = static_cast<int>(std::floor(sx));
      const double fx = sx - ix;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = (1 - fy) * ((1 - fx) * at(ix, iy, ch) + fx * at(ix + 1, iy, ch)) +
                         fy * ((1 - fx) * at(ix, iy + 1, ch) + fx * at(ix + 1, iy + 1, ch));
        row[(static_cast<std::int64_t>(y) * size + x) * 3 + ch] = v / 127.5 - 1.0;
      }
    }
  }
  return row;
}

Image row_to_image(const Tensor& row, int size) {
  if (row.size() != static_cast<std::int64_t>(size) * size * 3)
    throw InputError("row_to_image: row does not hold a " + std::to_string(size) + "px image");
  Image img{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(row.size()))};
  for (std::int64_t i = 0; i < row.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp((row[i] + 1.0) * 127.5, 0.0, 255.0)));
  return img;
}

Image tile_images(const Tensor& rows, int size, int columns) {
  if (rows.rows() < 1 || columns < 1) throw InputError("tile_images: nothing to tile");
  const int n = static_cast<int>(rows.rows());
  const int grid_rows = (n + columns - 1) / columns;
  Image out{columns * size, grid_rows * size,
            std::vector<std::uint8_t>(static_cast<std::size_t>(columns) * size * grid_rows * size * 3)};
  for (int k = 0; k < n; ++k) {
    const Image tile = row_to_image(rows.row_at(k), size);
    const int ox = (k % columns) * size;
    const int oy = (k / columns) * size;
    for (int y = 0; y < size; ++y)
      std::memcpy(&out.rgb[(static_cast<std::size_t>(oy + y) * out.width + ox) * 3],
                  &tile.rgb[static_cast<std::size_t>(y) * size * 3], static_cast<std::size_t>(size) * 3);
  }
  return out;
}

}  // namespace scad
