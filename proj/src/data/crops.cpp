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

#include "data/crops.hpp"

#include "common/error.hpp"

namespace clipce::data {

std::vector<Image> crop_objects(const DatasetManifest& manifest, std::int64_t image_id,
                                const embedding::CropPolicy& policy) {
  const ManifestEntry* entry = manifest.find(image_id);
  require(entry != nullptr, ErrorCode::kInput, "unknown image_id " + std::to_string(image_id));
  Image image;
  try {
    image = read_png(manifest.image_file(*entry));
  } catch (const Error& e) {
    fail(ErrorCode::kIo, "image_id " + std::to_string(image_id) + " unreadable: " + e.what());
  }
  std::vector<Image> crops;
  crops.reserve(entry->annotations.size());
  for (const Annotation& a : entry->annotations) {
    crops.push_back(embedding::prepare_crop(image, a.bbox, policy));
  }
  return crops;
}

}  // namespace clipce::data
