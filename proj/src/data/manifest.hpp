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
#include <optional>
#include <string>
#include <vector>

#include "common/box.hpp"
#include "common/io.hpp"
#include "image/image.hpp"

namespace clipce::data {

inline constexpr const char* kManifestSchema = "manifest/v1";

struct Annotation {
  std::int64_t annotation_id = 0;
  int class_index = 0;
  Box bbox;
  // Mean (1 - t) inside the box; set by haze synthesis, absent for real data.
  std::optional<double> degradation;
};

struct ManifestEntry {
  std::int64_t image_id = 0;
  std::string image_path;
  int width = 0;
  int height = 0;
  std::optional<std::string> depth_path;
  std::vector<Annotation> annotations;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
  std::string split = "train";
  // Directory relative paths are resolved against. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path image_file(const ManifestEntry& e) const { return resolve_path(base_dir, e.image_path); }
  std::optional<std::filesystem::path> depth_file(const ManifestEntry& e) const;
  const ManifestEntry* find(std::int64_t image_id) const;
  std::size_t annotation_count() const;
};

// Throws kInput on duplicate ids, bad class indices or empty boxes.
void validate(const DatasetManifest& manifest);

// Entries sorted by image_id, annotations by annotation_id.
void sort_stable(DatasetManifest& manifest);

Json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
std::string manifest_hash(const DatasetManifest& manifest);

struct IngestReport {
  std::size_t dropped_boxes = 0;
  std::vector<std::string> missing_images;
};

// COCO detection JSON -> manifest. Category ids are mapped to a dense index in
// ascending id order. Depth maps are looked up by image filename stem under
// depth_root (.f32 or .png with a .json sidecar).
DatasetManifest ingest_coco(const std::filesystem::path& annotation_json, const std::filesystem::path& image_root,
                            const std::optional<std::filesystem::path>& depth_root, IngestReport* report = nullptr);

// COCO-style annotation JSON for a manifest.
Json to_coco(const DatasetManifest& manifest);

}  // namespace clipce::data
