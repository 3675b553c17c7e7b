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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common/box.hpp"
#include "common/rng.hpp"
#include "data/manifest.hpp"
#include "image/image.hpp"

namespace clipce::haze {

using Rgb = std::array<double, 3>;

struct HazeParams {
  Rgb atmospheric_light{1.0, 1.0, 1.0};
  double beta = 1.0;
  double clamp_ratio = 100.0;
};

void validate(const HazeParams& params);

// Dark-channel-prior settings for atmospheric light estimation.
struct DcpConfig {
  int patch_size = 15;
  double bright_fraction = 0.001;
};

// Floors every value at the smallest positive depth and caps it at
// clamp_ratio times that value. Order-preserving.
Map2D clamp_depth(const Map2D& depth, double clamp_ratio);
// Divides by the maximum; output in (0, 1] for a clamped map.
Map2D normalize_depth(const Map2D& depth);
// d' = max(d) - d, for disparity-style inputs where larger means nearer.
Map2D invert_depth(const Map2D& depth);

// t(x) = exp(-beta * d(x)).
Map2D transmission(const Map2D& depth, double beta);

Map2D dark_channel(const Image& image, int patch_size);
Rgb estimate_atmospheric_light(const Image& clear, const DcpConfig& config = {});

// I = J * t + A * (1 - t), per channel.
Image compose_haze(const Image& clear, const Map2D& trans, const Rgb& atmospheric_light);
// J = (I - A * (1 - t)) / t. Unstable for small t; callers choose the floor.
Image recover_clear(const Image& hazy, const Map2D& trans, const Rgb& atmospheric_light);

// Mean (1 - t) over the pixels whose centers fall inside the box.
double box_degradation(const Map2D& trans, const Box& box);

// Depth files: raw float32 (16-byte header: "DEPTHF32", uint32 height,
// uint32 width, all little-endian) or 16-bit grayscale PNG whose samples are
// rescaled with min/max from a sibling .json sidecar.
Map2D load_depth(const std::filesystem::path& path);
void save_depth_f32(const std::filesystem::path& path, const Map2D& depth);
void save_depth_png16(const std::filesystem::path& path, const Map2D& depth);

class BetaPolicy {
 public:
  // "fixed:<k>" or "uniform:<lo>-<hi>" (integers).
  static BetaPolicy parse(const std::string& spec);
  static BetaPolicy fixed(int beta) { return BetaPolicy(beta, beta); }
  static BetaPolicy uniform(int lo, int hi) { return BetaPolicy(lo, hi); }

  double draw(SplitMix64& rng) const;
  std::string to_string() const;

 private:
  BetaPolicy(int lo, int hi);
  int lo_;
  int hi_;
};

struct SynthesisOptions {
  BetaPolicy beta = BetaPolicy::uniform(1, 5);
  double clamp_ratio = 100.0;
  DcpConfig dcp;
  std::uint64_t seed = 0;
  bool depth_invert = false;
  std::string config_hash;
};

struct SynthesizedImage {
  Image hazy;
  Map2D trans;
  HazeParams params;
};

// clamp -> normalize -> transmission -> A from the clear image -> composite.
SynthesizedImage synthesize_image(const Image& clear, const Map2D& depth, double beta, double clamp_ratio,
                                  const DcpConfig& dcp, bool depth_invert);

struct ProvenanceRecord {
  std::int64_t image_id = 0;
  double beta = 0.0;
  Rgb atmospheric_light{};
  double clamp_ratio = 0.0;
  std::uint64_t seed = 0;
};

struct SynthesisReport {
  std::vector<ProvenanceRecord> provenance;
  std::vector<std::string> skipped;
  std::vector<std::string> errors;
};

// Writes <out_dir>/images/*.png, provenance.jsonl, annotations.json and
// manifest.json. Annotations are carried through unchanged apart from the
// added per-object degradation proxy.
data::DatasetManifest synthesize_dataset(const data::DatasetManifest& manifest, const std::filesystem::path& out_dir,
                                         const SynthesisOptions& options, SynthesisReport* report = nullptr);

}  // namespace clipce::haze
