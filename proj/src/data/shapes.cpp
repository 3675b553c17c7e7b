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

#include "data/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "haze/haze.hpp"

namespace clipce::data {

namespace {

enum Shape { kSquare = 0, kCircle = 1, kTriangle = 2 };

bool inside(Shape shape, double u, double v) {
  // (u, v) in [0, 1]^2 relative to the box.
  switch (shape) {
    case kSquare:
      return true;
    case kCircle:
      return (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5) <= 0.25;
    case kTriangle:
      return std::abs(u - 0.5) <= 0.5 * v;
  }
  return false;
}

double overlap(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  return iw > 0 && ih > 0 ? iw * ih : 0.0;
}

}  // namespace

DatasetManifest make_shapes(const std::filesystem::path& out_dir, const ShapesOptions& o) {
  require(o.images > 0 && o.size >= 16 && o.min_objects >= 1 && o.max_objects >= o.min_objects &&
              o.min_box >= 4 && o.max_box >= o.min_box && o.max_box < o.size,
          ErrorCode::kConfig, "invalid synthetic shapes options");
  require(o.min_object_depth > 0 && o.max_object_depth >= o.min_object_depth &&
              o.background_depth >= o.max_object_depth,
          ErrorCode::kConfig, "invalid synthetic shapes depth range");
  std::filesystem::create_directories(out_dir / "clear");
  std::filesystem::create_directories(out_dir / "depth");

  DatasetManifest m;
  m.class_names = {"square", "circle", "triangle"};
  m.split = "train";
  m.base_dir = out_dir;
  std::int64_t next_ann = 1;
  for (std::size_t n = 0; n < o.images; ++n) {
    const auto image_id = static_cast<std::int64_t>(n + 1);
    SplitMix64 rng(mix_seed(o.seed, static_cast<std::uint64_t>(image_id)));
    const int s = o.size;
    Image img;
    img.width = img.height = s;
    img.channels = 3;
    img.data.assign(static_cast<std::size_t>(s) * s * 3, 0.0);
    Map2D depth;
    depth.width = depth.height = s;
    depth.values.assign(static_cast<std::size_t>(s) * s, o.background_depth);

    std::array<double, 3> top, bottom;
    for (int c = 0; c < 3; ++c) {
      top[c] = rng.uniform(0.35, 0.65);
      bottom[c] = rng.uniform(0.2, 0.5);
    }
    for (int y = 0; y < s; ++y) {
      const double f = static_cast<double>(y) / (s - 1);
      for (int x = 0; x < s; ++x)
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1 - f) * top[c] + f * bottom[c];
    }

    ManifestEntry entry;
    entry.image_id = image_id;
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06lld", static_cast<long long>(image_id));
    entry.image_path = std::string("clear/") + stem + ".png";
    entry.depth_path = std::string("depth/") + stem + ".f32";
    entry.width = entry.height = s;

    const int count = o.min_objects + static_cast<int>(rng.below(o.max_objects - o.min_objects + 1));
    std::vector<std::pair<double, Annotation>> placed;
    for (int k = 0, tries = 0; k < count && tries < 50; ++tries) {
      const int bw = o.min_box + static_cast<int>(rng.below(o.max_box - o.min_box + 1));
      const int bh = std::clamp(bw + static_cast<int>(rng.below(7)) - 3, o.min_box, o.max_box);
      const Box box{static_cast<double>(rng.below(s - bw + 1)), static_cast<double>(rng.below(s - bh + 1)),
                    static_cast<double>(bw), static_cast<double>(bh)};
      bool clash = false;
      for (const auto& p : placed) clash = clash || overlap(p.second.bbox, box) > 0.0;
      if (clash) continue;
      Annotation a;
      a.annotation_id = next_ann++;
      a.class_index = static_cast<int>(rng.below(3));
      a.bbox = box;
      placed.emplace_back(rng.uniform(o.min_object_depth, o.max_object_depth), a);
      ++k;
    }
    for (const auto& [d, a] : placed) {
      // Saturated colour: one channel high, one low, one anywhere.
      std::array<double, 3> col{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
      const auto hi = rng.below(3);
      col[hi] = rng.uniform(0.85, 1.0);
      col[(hi + 1 + rng.below(2)) % 3] = rng.uniform(0.0, 0.1);
      const Shape shape = static_cast<Shape>(a.class_index);
      for (int y = static_cast<int>(a.bbox.y); y < static_cast<int>(a.bbox.y2()); ++y) {
        for (int x = static_cast<int>(a.bbox.x); x < static_cast<int>(a.bbox.x2()); ++x) {
          const double u = (x + 0.5 - a.bbox.x) / a.bbox.w;
          const double v = (y + 0.5 - a.bbox.y) / a.bbox.h;
          if (!inside(shape, u, v)) continue;
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
        }
      }
      entry.annotations.push_back(a);
    }
    // The whole box takes the object depth so each object has one haze level.
    for (const auto& [d, a] : placed) {
      for (int y = static_cast<int>(a.bbox.y); y < static_cast<int>(a.bbox.y2()); ++y)
        for (int x = static_cast<int>(a.bbox.x); x < static_cast<int>(a.bbox.x2()); ++x) depth.at(x, y) = d;
    }
    write_png(out_dir / entry.image_path, img);
    haze::save_depth_f32(out_dir / *entry.depth_path, depth);
    m.entries.push_back(std::move(entry));
  }
  validate(m);
  write_json(out_dir / "annotations.json", to_coco(m));
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace clipce::data
