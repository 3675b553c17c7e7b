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

#include "data/manifest.hpp"

namespace clipce::data {

struct ShapesOptions {
  std::size_t images = 200;
  int size = 64;
  int min_objects = 1;
  int max_objects = 3;
  int min_box = 12;
  int max_box = 28;
  double background_depth = 100.0;
  double min_object_depth = 2.0;
  double max_object_depth = 90.0;
  std::uint64_t seed = 0;
};

// Synthetic clear-weather dataset of squares, circles and triangles on a
// smooth background, with a metric depth map per image. Writes
// <out_dir>/clear/<id>.png, <out_dir>/depth/<id>.f32, annotations.json (COCO)
// and manifest.json; returns the manifest.
DatasetManifest make_shapes(const std::filesystem::path& out_dir, const ShapesOptions& options);

}  // namespace clipce::data
