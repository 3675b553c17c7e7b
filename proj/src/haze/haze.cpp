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

#include "haze/haze.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/log.hpp"

namespace clipce::haze {

namespace fs = std::filesystem;

namespace {

constexpr char kDepthMagic[8] = {'D', 'E', 'P', 'T', 'H', 'F', '3', '2'};

void check_depth_values(const Map2D& depth) {
  for (double v : depth.values) {
    require(std::isfinite(v) && v >= 0.0, ErrorCode::kInput, "depth values must be finite and nonnegative");
  }
}

void check_same_shape(const Image& image, const Map2D& map) {
  require(image.width == map.width && image.height == map.height, ErrorCode::kInput,
          "shape mismatch: image " + std::to_string(image.width) + "x" + std::to_string(image.height) + " vs map " +
              std::to_string(map.width) + "x" + std::to_string(map.height));
}

// Sliding minimum along one axis with a window of radius r (clamped at borders).
void min_filter_1d(const double* in, double* out, int n, int stride, int r) {
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - r);
    const int hi = std::min(n - 1, i + r);
    double m = in[lo * stride];
    for (int k = lo + 1; k <= hi; ++k) m = std::min(m, in[k * stride]);
    out[i * stride] = m;
  }
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(const unsigned char* b) {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void validate(const HazeParams& p) {
  for (double a : p.atmospheric_light) {
    require(a >= 0.0 && a <= 1.0, ErrorCode::kInput, "atmospheric light channels must lie in [0, 1]");
  }
  require(p.beta > 0.0 && std::isfinite(p.beta), ErrorCode::kInput, "beta must be positive");
  require(p.clamp_ratio >= 1.0, ErrorCode::kInput, "clamp ratio must be at least 1");
}

Map2D clamp_depth(const Map2D& depth, double clamp_ratio) {
  require(clamp_ratio >= 1.0, ErrorCode::kInput, "clamp ratio must be at least 1");
  check_depth_values(depth);
  double d_min = std::numeric_limits<double>::infinity();
  for (double v : depth.values) {
    if (v > 0.0) d_min = std::min(d_min, v);
  }
  require(std::isfinite(d_min), ErrorCode::kDegenerate, "depth map has no positive entries");
  const double d_max = clamp_ratio * d_min;
  Map2D out = depth;
  for (double& v : out.values) v = std::clamp(v, d_min, d_max);
  return out;
}

Map2D normalize_depth(const Map2D& depth) {
  check_depth_values(depth);
  require(!depth.values.empty(), ErrorCode::kDegenerate, "empty depth map");
  const double m = *std::max_element(depth.values.begin(), depth.values.end());
  require(m > 0.0, ErrorCode::kDegenerate, "depth map maximum is zero");
  Map2D out = depth;
  for (double& v : out.values) v /= m;
  return out;
}

Map2D invert_depth(const Map2D& depth) {
  check_depth_values(depth);
  require(!depth.values.empty(), ErrorCode::kDegenerate, "empty depth map");
  const double m = *std::max_element(depth.values.begin(), depth.values.end());
  Map2D out = depth;
  for (double& v : out.values) v = m - v;
  return out;
}

Map2D transmission(const Map2D& depth, double beta) {
  require(beta > 0.0 && std::isfinite(beta), ErrorCode::kInput, "beta must be positive");
  Map2D t = depth;
  for (double& v : t.values) v = std::exp(-beta * v);
  return t;
}

Map2D dark_channel(const Image& image, int patch_size) {
  require(!image.empty(), ErrorCode::kInput, "empty image");
  require(patch_size > 0 && patch_size % 2 == 1, ErrorCode::kConfig, "DCP patch size must be odd and positive");
  const int limit = std::min(image.width, image.height);
  if (patch_size > limit) {
    int shrunk = limit % 2 == 1 ? limit : limit - 1;
    warn("image " + std::to_string(image.width) + "x" + std::to_string(image.height) + " smaller than DCP patch " +
         std::to_string(patch_size) + "; using " + std::to_string(shrunk));
    patch_size = shrunk;
  }
  Map2D channel_min(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double m = image.at(x, y, 0);
      for (int c = 1; c < image.channels; ++c) m = std::min(m, image.at(x, y, c));
      channel_min.at(x, y) = m;
    }
  }
  // A square minimum filter is separable.
  const int r = patch_size / 2;
  Map2D rows(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    min_filter_1d(&channel_min.values[static_cast<std::size_t>(y) * image.width],
                  &rows.values[static_cast<std::size_t>(y) * image.width], image.width, 1, r);
  }
  Map2D out(image.width, image.height);
  for (int x = 0; x < image.width; ++x) {
    min_filter_1d(&rows.values[x], &out.values[x], image.height, image.width, r);
  }
  return out;
}

Rgb estimate_atmospheric_light(const Image& clear, const DcpConfig& config) {
  require(config.bright_fraction > 0.0 && config.bright_fraction <= 1.0, ErrorCode::kConfig,
          "DCP bright fraction must lie in (0, 1]");
  for (double v : clear.data) require(v >= 0.0 && v <= 1.0, ErrorCode::kInput, "image values must lie in [0, 1]");
  Map2D dark = dark_channel(clear, config.patch_size);
  const std::size_t n = dark.values.size();
  const std::size_t top = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.bright_fraction * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dark.values[a] != dark.values[b]) return dark.values[a] > dark.values[b];
                      return a < b;
                    });
  Rgb a{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < top; ++k) {
    const std::size_t idx = order[k];
    for (int c = 0; c < 3; ++c) a[c] += clear.data[idx * clear.channels + std::min(c, clear.channels - 1)];
  }
  for (double& v : a) v = std::clamp(v / static_cast<double>(top), 0.0, 1.0);
  return a;
}

Image compose_haze(const Image& clear, const Map2D& trans, const Rgb& a) {
  check_same_shape(clear, trans);
  require(clear.channels == 3, ErrorCode::kInput, "compose_haze expects an RGB image");
  Image out = clear;
  for (int y = 0; y < clear.height; ++y) {
    for (int x = 0; x < clear.width; ++x) {
      const double t = trans.at(x, y);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clear.at(x, y, c) * t + a[c] * (1.0 - t);
    }
  }
  return out;
}

Image recover_clear(const Image& hazy, const Map2D& trans, const Rgb& a) {
  check_same_shape(hazy, trans);
  Image out = hazy;
  for (int y = 0; y < hazy.height; ++y) {
    for (int x = 0; x < hazy.width; ++x) {
      const double t = trans.at(x, y);
      require(t > 0.0, ErrorCode::kNumeric, "cannot invert zero transmission");
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = (hazy.at(x, y, c) - a[c] * (1.0 - t)) / t;
    }
  }
  return out;
}

double box_degradation(const Map2D& trans, const Box& box) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < trans.height; ++y) {
    const double cy = y + 0.5;
    if (cy < box.y || cy > box.y2()) continue;
    for (int x = 0; x < trans.width; ++x) {
      const double cx = x + 0.5;
      if (cx < box.x || cx > box.x2()) continue;
      sum += 1.0 - trans.at(x, y);
      ++n;
    }
  }
  if (n == 0) {
    const int x = std::clamp(static_cast<int>(box.cx()), 0, trans.width - 1);
    const int y = std::clamp(static_cast<int>(box.cy()), 0, trans.height - 1);
    return 1.0 - trans.at(x, y);
  }
  return sum / static_cast<double>(n);
}

Map2D load_depth(const fs::path& path) {
  if (path.extension() == ".png") {
    Map2D raw = read_png16_gray(path);
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    require(fs::exists(sidecar), ErrorCode::kIo, "missing depth sidecar " + sidecar.string());
    Json meta = read_json(sidecar);
    const double lo = meta.at("min").get<double>();
    const double hi = meta.at("max").get<double>();
    for (double& v : raw.values) v = lo + (v / 65535.0) * (hi - lo);
    return raw;
  }
  std::string bytes = read_text(path);
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kDepthMagic, 8) == 0, ErrorCode::kIo,
          path.string() + " is not a DEPTHF32 file");
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t h = read_u32(b + 8);
  const std::uint32_t w = read_u32(b + 12);
  const std::size_t count = static_cast<std::size_t>(h) * w;
  require(bytes.size() == 16 + 4 * count, ErrorCode::kIo, path.string() + ": truncated depth payload");
  Map2D map(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = read_u32(b + 16 + 4 * i);
    float f;
    std::memcpy(&f, &u, 4);
    map.values[i] = f;
  }
  return map;
}

void save_depth_f32(const fs::path& path, const Map2D& depth) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out.write(kDepthMagic, 8);
  write_u32(out, static_cast<std::uint32_t>(depth.height));
  write_u32(out, static_cast<std::uint32_t>(depth.width));
  for (double v : depth.values) {
    float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    write_u32(out, u);
  }
}

void save_depth_png16(const fs::path& path, const Map2D& depth) {
  require(!depth.values.empty(), ErrorCode::kInput, "empty depth map");
  const auto [lo_it, hi_it] = std::minmax_element(depth.values.begin(), depth.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<std::uint16_t> samples(depth.values.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double s = hi > lo ? (depth.values[i] - lo) / (hi - lo) : 0.0;
    samples[i] = static_cast<std::uint16_t>(std::lround(s * 65535.0));
  }
  write_png16_gray(path, samples, depth.width, depth.height);
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  write_json(sidecar, Json{{"schema", "depth_sidecar/v1"}, {"min", lo}, {"max", hi}});
}

BetaPolicy::BetaPolicy(int lo, int hi) : lo_(lo), hi_(hi) {
  require(lo > 0 && lo <= hi, ErrorCode::kConfig, "beta policy requires 0 < lo <= hi");
}

BetaPolicy BetaPolicy::parse(const std::string& spec) {
  try {
    if (spec.rfind("fixed:", 0) == 0) {
      std::size_t used = 0;
      const std::string v = spec.substr(6);
      int k = std::stoi(v, &used);
      require(used == v.size(), ErrorCode::kConfig, "bad beta value");
      return fixed(k);
    }
    if (spec.rfind("uniform:", 0) == 0) {
      const std::string range = spec.substr(8);
      const std::size_t dash = range.find('-');
      require(dash != std::string::npos, ErrorCode::kConfig, "uniform beta needs <lo>-<hi>");
      return uniform(std::stoi(range.substr(0, dash)), std::stoi(range.substr(dash + 1)));
    }
  } catch (const std::logic_error&) {
  }
  fail(ErrorCode::kConfig, "beta policy must be fixed:<k> or uniform:<lo>-<hi> (got \"" + spec + "\")");
}

double BetaPolicy::draw(SplitMix64& rng) const {
  return static_cast<double>(lo_ + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi_ - lo_ + 1))));
}

std::string BetaPolicy::to_string() const {
  return lo_ == hi_ ? "fixed:" + std::to_string(lo_) : "uniform:" + std::to_string(lo_) + "-" + std::to_string(hi_);
}

SynthesizedImage synthesize_image(const Image& clear, const Map2D& depth, double beta, double clamp_ratio,
                                  const DcpConfig& dcp, bool depth_invert) {
  check_same_shape(clear, depth);
  Map2D d = depth_invert ? invert_depth(depth) : depth;
  d = normalize_depth(clamp_depth(d, clamp_ratio));
  SynthesizedImage out;
  out.trans = transmission(d, beta);
  out.params = HazeParams{estimate_atmospheric_light(clear, dcp), beta, clamp_ratio};
  out.hazy = compose_haze(clear, out.trans, out.params.atmospheric_light);
  return out;
}

data::DatasetManifest synthesize_dataset(const data::DatasetManifest& manifest, const fs::path& out_dir,
                                         const SynthesisOptions& options, SynthesisReport* report) {
  SynthesisReport local;
  SynthesisReport& rep = report ? *report : local;
  fs::create_directories(out_dir / "images");

  data::DatasetManifest out;
  out.class_names = manifest.class_names;
  out.split = manifest.split;
  out.base_dir = out_dir;

  std::string provenance;
  for (const data::ManifestEntry& entry : manifest.entries) {
    const std::string id = std::to_string(entry.image_id);
    auto depth_path = manifest.depth_file(entry);
    if (!depth_path) {
      rep.skipped.push_back("image_id " + id + ": no depth map");
      continue;
    }
    Image clear;
    Map2D depth;
    try {
      clear = read_png(manifest.image_file(entry));
      depth = load_depth(*depth_path);
    } catch (const Error& e) {
      rep.errors.push_back("image_id " + id + ": " + e.what());
      continue;
    }
    SplitMix64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(entry.image_id)));
    const double beta = options.beta.draw(rng);
    SynthesizedImage synth;
    try {
      synth = synthesize_image(clear, depth, beta, options.clamp_ratio, options.dcp, options.depth_invert);
    } catch (const Error& e) {
      rep.errors.push_back("image_id " + id + ": " + e.what());
      continue;
    }
    const std::string file_name = fs::path(entry.image_path).stem().string() + ".png";
    write_png(out_dir / "images" / file_name, synth.hazy);

    data::ManifestEntry o = entry;
    o.image_path = "images/" + file_name;
    o.width = clear.width;
    o.height = clear.height;
    o.depth_path = fs::absolute(*depth_path).lexically_normal().string();
    for (data::Annotation& a : o.annotations) a.degradation = box_degradation(synth.trans, a.bbox);
    out.entries.push_back(std::move(o));

    ProvenanceRecord rec{entry.image_id, beta, synth.params.atmospheric_light, options.clamp_ratio, options.seed};
    rep.provenance.push_back(rec);
    Json line = {{"schema", "provenance/v1"},
                 {"image_id", rec.image_id},
                 {"beta", rec.beta},
                 {"A", rec.atmospheric_light},
                 {"clamp_ratio", rec.clamp_ratio},
                 {"seed", rec.seed},
                 {"depth_invert", options.depth_invert},
                 {"beta_policy", options.beta.to_string()},
                 {"config_hash", options.config_hash},
                 {"tool_version", kToolVersion}};
    provenance += line.dump() + "\n";
  }
  for (const std::string& s : rep.skipped) warn(s);
  for (const std::string& s : rep.errors) warn(s);

  write_text(out_dir / "provenance.jsonl", provenance);
  write_json(out_dir / "annotations.json", data::to_coco(out));
  data::save_manifest(out_dir / "manifest.json", out);
  return out;
}

}  // namespace clipce::haze
