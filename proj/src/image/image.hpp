// Copyright 2026 The clipce Authors. All Rights Reserved.
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace clipce {

// Interleaved image with values in linear [0, 1]. Conversion to 8 bits happens
// only when reading or writing files.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c = 3, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Single-channel real grid (depth, transmission, dark channel).
struct Map2D {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Map2D() = default;
  Map2D(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

Image read_png(const std::filesystem::path& path);
// Rounds to the nearest 8-bit level.
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<unsigned char> to_bytes(const Image& image);
Image from_bytes(const std::vector<unsigned char>& bytes, int width, int height, int channels);

// 16-bit grayscale PNG; raw sample values are returned as 0..65535.
Map2D read_png16_gray(const std::filesystem::path& path);
void write_png16_gray(const std::filesystem::path& path, const std::vector<std::uint16_t>& samples,
                      int width, int height);

Image crop(const Image& image, const PixelRect& rect);
Image resize_bilinear(const Image& image, int width, int height);

}  // namespace clipce
