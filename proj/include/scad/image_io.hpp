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
#include <vector>

#include "scad/tensor.hpp"

namespace scad {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Decodes any PNG libpng understands into RGB. InputError on failure.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

/// Centre-crops to a square, resizes bilinearly to size x size and maps
/// [0, 255] to [-1, 1]: a [1, size*size*3] row.
Tensor image_to_row(const Image& image, int size);
/// Inverse mapping with clamping; row is [1, size*size*3].
Image row_to_image(const Tensor& row, int size);

/// Tiles equally sized rows into a grid `columns` wide.
Image tile_images(const Tensor& rows, int size, int columns);

}  // namespace scad
