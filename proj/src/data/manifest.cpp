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

#include "data/manifest.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/log.hpp"

namespace clipce::data {

namespace fs = std::filesystem;

std::optional<fs::path> DatasetManifest::depth_file(const ManifestEntry& e) const {
  if (!e.depth_path) return std::nullopt;
  return resolve_path(base_dir, *e.depth_path);
}

const ManifestEntry* DatasetManifest::find(std::int64_t image_id) const {
  for (const ManifestEntry& e : entries) {
    if (e.image_id == image_id) return &e;
  }
  return nullptr;
}

std::size_t DatasetManifest::annotation_count() const {
  std::size_t n = 0;
  for (const ManifestEntry& e : entries) n += e.annotations.size();
  return n;
}

void validate(const DatasetManifest& manifest) {
  std::set<std::int64_t> image_ids;
  std::set<std::int64_t> annotation_ids;
  const int num_classes = static_cast<int>(manifest.class_names.size());
  for (const ManifestEntry& e : manifest.entries) {
    require(image_ids.insert(e.image_id).second, ErrorCode::kInput,
            "duplicate image_id " + std::to_string(e.image_id));
    for (const Annotation& a : e.annotations) {
      require(annotation_ids.insert(a.annotation_id).second, ErrorCode::kInput,
              "duplicate annotation_id " + std::to_string(a.annotation_id));
      require(a.class_index >= 0 && a.class_index < num_classes, ErrorCode::kInput,
              "annotation " + std::to_string(a.annotation_id) + " has invalid class_index " +
                  std::to_string(a.class_index));
      Box clipped = e.width > 0 && e.height > 0 ? clip_box(a.bbox, e.width, e.height) : a.bbox;
      require(clipped.area() > 0.0, ErrorCode::kInput,
              "annotation " + std::to_string(a.annotation_id) + " has an empty box");
    }
  }
}

void sort_stable(DatasetManifest& manifest) {
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.image_id < b.image_id; });
  for (ManifestEntry& e : manifest.entries) {
    std::sort(e.annotations.begin(), e.annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.annotation_id < b.annotation_id; });
  }
}

Json to_json(const DatasetManifest& manifest) {
  Json entries = Json::array();
  for (const ManifestEntry& e : manifest.entries) {
    Json anns = Json::array();
    for (const Annotation& a : e.annotations) {
      Json ja = {{"annotation_id", a.annotation_id},
                 {"class_index", a.class_index},
                 {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}};
      if (a.degradation) ja["degradation"] = *a.degradation;
      anns.push_back(std::move(ja));
    }
    Json je = {{"image_id", e.image_id},
               {"image_path", e.image_path},
               {"width", e.width},
               {"height", e.height},
               {"annotations", std::move(anns)}};
    if (e.depth_path) je["depth_path"] = *e.depth_path;
    entries.push_back(std::move(je));
  }
  return Json{{"schema", kManifestSchema},
              {"split", manifest.split},
              {"class_names", manifest.class_names},
              {"entries", std::move(entries)}};
}

DatasetManifest manifest_from_json(const Json& j, const fs::path& base_dir) {
  try {
    require(j.value("schema", "") == kManifestSchema, ErrorCode::kParse,
            std::string("manifest schema must be \"") + kManifestSchema + "\"");
    DatasetManifest m;
    m.base_dir = base_dir;
    m.split = j.value("split", "train");
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const Json& je : j.at("entries")) {
      ManifestEntry e;
      e.image_id = je.at("image_id").get<std::int64_t>();
      e.image_path = je.at("image_path").get<std::string>();
      e.width = je.value("width", 0);
      e.height = je.value("height", 0);
      if (je.contains("depth_path")) e.depth_path = je.at("depth_path").get<std::string>();
      for (const Json& ja : je.at("annotations")) {
        Annotation a;
        a.annotation_id = ja.at("annotation_id").get<std::int64_t>();
        a.class_index = ja.at("class_index").get<int>();
        const Json& b = ja.at("bbox");
        require(b.is_array() && b.size() == 4, ErrorCode::kParse, "bbox must have 4 numbers");
        a.bbox = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        if (ja.contains("degradation") && !ja.at("degradation").is_null()) {
          a.degradation = ja.at("degradation").get<double>();
        }
        e.annotations.push_back(a);
      }
      m.entries.push_back(std::move(e));
    }
    validate(m);
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json(path), path.parent_path());
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_json(path, to_json(manifest));
}

std::string manifest_hash(const DatasetManifest& manifest) {
  return sha256_hex(to_json(manifest).dump());
}

namespace {

std::optional<std::string> find_depth(const fs::path& depth_root, const std::string& file_name) {
  const std::string stem = fs::path(file_name).stem().string();
  for (const char* ext : {".f32", ".png"}) {
    fs::path candidate = depth_root / (stem + ext);
    if (fs::exists(candidate)) return fs::absolute(candidate).lexically_normal().string();
  }
  return std::nullopt;
}

}  // namespace

DatasetManifest ingest_coco(const fs::path& annotation_json, const fs::path& image_root,
                            const std::optional<fs::path>& depth_root, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  Json j = read_json(annotation_json);
  DatasetManifest m;
  m.split = annotation_json.stem().string();
  try {
    std::map<std::int64_t, std::string> categories;
    for (const Json& c : j.at("categories")) {
      categories[c.at("id").get<std::int64_t>()] = c.at("name").get<std::string>();
    }
    std::map<std::int64_t, int> dense;
    for (const auto& [id, name] : categories) {
      dense[id] = static_cast<int>(m.class_names.size());
      m.class_names.push_back(name);
    }

    std::map<std::int64_t, ManifestEntry> images;
    for (const Json& im : j.at("images")) {
      ManifestEntry e;
      e.image_id = im.at("id").get<std::int64_t>();
      const std::string file_name = im.at("file_name").get<std::string>();
      e.image_path = fs::absolute(image_root / file_name).lexically_normal().string();
      e.width = im.value("width", 0);
      e.height = im.value("height", 0);
      if (depth_root) e.depth_path = find_depth(*depth_root, file_name);
      if (!fs::exists(e.image_path)) rep.missing_images.push_back(e.image_path);
      require(images.emplace(e.image_id, std::move(e)).second, ErrorCode::kInput, "duplicate image id in COCO file");
    }

    for (const Json& ja : j.at("annotations")) {
      const std::int64_t cat = ja.at("category_id").get<std::int64_t>();
      auto ci = dense.find(cat);
      require(ci != dense.end(), ErrorCode::kInput,
              "annotation " + std::to_string(ja.at("id").get<std::int64_t>()) +
                  " references missing category id " + std::to_string(cat));
      const std::int64_t image_id = ja.at("image_id").get<std::int64_t>();
      auto ii = images.find(image_id);
      require(ii != images.end(), ErrorCode::kInput,
              "annotation references missing image id " + std::to_string(image_id));
      const Json& b = ja.at("bbox");
      Box box{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
      ManifestEntry& e = ii->second;
      if (e.width > 0 && e.height > 0) box = clip_box(box, e.width, e.height);
      if (box.area() <= 0.0) {
        ++rep.dropped_boxes;
        continue;
      }
      e.annotations.push_back(Annotation{ja.at("id").get<std::int64_t>(), ci->second, box, std::nullopt});
    }
    for (auto& [id, e] : images) m.entries.push_back(std::move(e));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, annotation_json.string() + ": " + e.what());
  }

  if (!rep.missing_images.empty()) {
    const double fraction = static_cast<double>(rep.missing_images.size()) / std::max<std::size_t>(1, m.entries.size());
    for (const std::string& p : rep.missing_images) warn("missing image " + p);
    require(fraction < 0.01, ErrorCode::kIo,
            std::to_string(rep.missing_images.size()) + " of " + std::to_string(m.entries.size()) +
                " images are missing (limit 1%)");
  }
  if (rep.dropped_boxes > 0) warn("dropped " + std::to_string(rep.dropped_boxes) + " zero-area boxes");
  sort_stable(m);
  m.base_dir = fs::path();
  validate(m);
  return m;
}

Json to_coco(const DatasetManifest& manifest) {
  Json images = Json::array();
  Json annotations = Json::array();
  Json categories = Json::array();
  for (std::size_t i = 0; i < manifest.class_names.size(); ++i) {
    categories.push_back({{"id", static_cast<int>(i) + 1}, {"name", manifest.class_names[i]}});
  }
  for (const ManifestEntry& e : manifest.entries) {
    images.push_back({{"id", e.image_id},
                      {"file_name", fs::path(e.image_path).filename().string()},
                      {"width", e.width},
                      {"height", e.height}});
    for (const Annotation& a : e.annotations) {
      annotations.push_back({{"id", a.annotation_id},
                             {"image_id", e.image_id},
                             {"category_id", a.class_index + 1},
                             {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                             {"area", a.bbox.area()},
                             {"iscrowd", 0}});
    }
  }
  return Json{{"images", images}, {"annotations", annotations}, {"categories", categories}};
}

}  // namespace clipce::data
