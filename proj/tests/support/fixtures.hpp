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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "data/manifest.hpp"
#include "image/image.hpp"

namespace testing_support {

struct ObjectSpec {
  clipce::Box box;
  int class_index = 0;
  std::optional<double> degradation;
};

// One gray image on disk with the given objects, wrapped in a manifest.
inline clipce::data::DatasetManifest single_image_manifest(const std::filesystem::path& dir,
                                                           const std::vector<ObjectSpec>& objects,
                                                           std::vector<std::string> classes = {"car"},
                                                           int size = 48) {
  clipce::Image img(size, size, 3, 0.4);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(x, y, 0) = static_cast<double>(x) / size;
  std::filesystem::create_directories(dir);
  clipce::write_png(dir / "img.png", img);
  clipce::data::DatasetManifest m;
  m.class_names = std::move(classes);
  m.base_dir = dir;
  clipce::data::ManifestEntry e;
  e.image_id = 1;
  e.image_path = "img.png";
  e.width = size;
  e.height = size;
  std::int64_t id = 1;
  for (const ObjectSpec& o : objects) {
    clipce::data::Annotation a;
    a.annotation_id = id++;
    a.class_index = o.class_index;
    a.bbox = o.box;
    a.degradation = o.degradation;
    e.annotations.push_back(a);
  }
  m.entries.push_back(e);
  return m;
}

}  // namespace testing_support
