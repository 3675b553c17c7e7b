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

#include "image/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <string>

#include "common/error.hpp"

namespace clipce {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  require(f != nullptr, ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> rows;  // big-endian for 16-bit
};

// Decodes to gray / gray+alpha / rgb / rgba at 8 or 16 bits, palette expanded.
DecodedPng decode_png(const fs::path& path) {
  FilePtr file = open_file(path, "rb");
  unsigned char sig[8];
  require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorCode::kIo,
          path.string() + " is not a PNG file");
  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
  require(png != nullptr, ErrorCode::kInternal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, path.string() + ": " + what);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  std::size_t rowbytes = png_get_rowbytes(png, info);
  out.rows.resize(rowbytes * out.height);
  std::vector<png_bytep> ptrs(out.height);
  for (int y = 0; y < out.height; ++y) ptrs[y] = out.rows.data() + rowbytes * y;
  png_read_image(png, ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode_png(const fs::path& path, const unsigned char* rows, int width, int height,
                int color_type, int bit_depth, std::size_t rowbytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr file = open_file(path, "wb");
  std::string what;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
  require(png != nullptr, ErrorCode::kInternal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, path.string() + ": " + what);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rows + rowbytes * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

unsigned char quantize(double v) {
  double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

Image read_png(const fs::path& path) {
  DecodedPng png = decode_png(path);
  Image img(png.width, png.height, 3);
  const int bytes_per_sample = png.bit_depth == 16 ? 2 : 1;
  const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t rowbytes = static_cast<std::size_t>(png.width) * png.channels * bytes_per_sample;
  for (int y = 0; y < png.height; ++y) {
    const unsigned char* row = png.rows.data() + rowbytes * y;
    for (int x = 0; x < png.width; ++x) {
      auto sample = [&](int c) {
        const unsigned char* p = row + (static_cast<std::size_t>(x) * png.channels + c) * bytes_per_sample;
        unsigned v = bytes_per_sample == 2 ? (unsigned(p[0]) << 8) | p[1] : p[0];
        return v / scale;
      };
      if (png.channels >= 3) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = sample(c);
      } else {
        double g = sample(0);
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = g;
      }
    }
  }
  return img;
}

void write_png(const fs::path& path, const Image& image) {
  require(!image.empty() && image.channels == 3, ErrorCode::kInput, "write_png expects a non-empty RGB image");
  std::vector<unsigned char> bytes = to_bytes(image);
  encode_png(path, bytes.data(), image.width, image.height, PNG_COLOR_TYPE_RGB, 8,
             static_cast<std::size_t>(image.width) * 3);
}

std::vector<unsigned char> to_bytes(const Image& image) {
  std::vector<unsigned char> out(image.data.size());
  std::transform(image.data.begin(), image.data.end(), out.begin(), quantize);
  return out;
}

Image from_bytes(const std::vector<unsigned char>& bytes, int width, int height, int channels) {
  Image img(width, height, channels);
  require(bytes.size() == img.data.size(), ErrorCode::kInput, "byte buffer size mismatch");
  std::transform(bytes.begin(), bytes.end(), img.data.begin(), [](unsigned char b) { return b / 255.0; });
  return img;
}

Map2D read_png16_gray(const fs::path& path) {
  DecodedPng png = decode_png(path);
  require(png.channels == 1 && png.bit_depth == 16, ErrorCode::kIo,
          path.string() + " is not a 16-bit single-channel PNG");
  Map2D map(png.width, png.height);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.values[i] = static_cast<double>((unsigned(png.rows[2 * i]) << 8) | png.rows[2 * i + 1]);
  }
  return map;
}

void write_png16_gray(const fs::path& path, const std::vector<std::uint16_t>& samples, int width,
                      int height) {
  require(samples.size() == static_cast<std::size_t>(width) * height, ErrorCode::kInput,
          "sample count does not match dimensions");
  std::vector<unsigned char> bytes(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xFF);
  }
  encode_png(path, bytes.data(), width, height, PNG_COLOR_TYPE_GRAY, 16, static_cast<std::size_t>(width) * 2);
}

Image crop(const Image& image, const PixelRect& rect) {
  require(!rect.empty(), ErrorCode::kInput, "empty crop rectangle");
  require(rect.x0 >= 0 && rect.y0 >= 0 && rect.x1 <= image.width && rect.y1 <= image.height, ErrorCode::kInput,
          "crop rectangle outside image");
  Image out(rect.width(), rect.height(), image.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(rect.x0 + x, rect.y0 + y, c);
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int width, int height) {
  require(!image.empty() && width > 0 && height > 0, ErrorCode::kInput, "invalid resize");
  Image out(width, height, image.channels);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, image.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, image.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        double top = image.at(x0, y0, c) * (1 - wx) + image.at(x1, y0, c) * wx;
        double bot = image.at(x0, y1, c) * (1 - wx) + image.at(x1, y1, c) * wx;
        out.at(x, y, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace clipce
