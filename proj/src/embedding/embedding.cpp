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

#include "embedding/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/log.hpp"
#include "common/rng.hpp"

namespace clipce::embedding {

namespace {

constexpr std::string_view kPlaceholder = "{cls}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string substitute(std::string_view tmpl, std::string_view class_name) {
  std::size_t pos = tmpl.find(kPlaceholder);
  std::string out(tmpl.substr(0, pos));
  out += class_name;
  out += tmpl.substr(pos + kPlaceholder.size());
  return out;
}

std::vector<double> gaussian_direction(std::uint64_t seed, std::size_t dim) {
  SplitMix64 rng(seed);
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

Embedding Embedding::normalized(std::vector<double> values) {
  require(!values.empty(), ErrorCode::kInput, "embedding must have positive dimension");
  double sq = 0.0;
  for (double x : values) {
    require(std::isfinite(x), ErrorCode::kNumeric, "embedding has non-finite entries");
    sq += x * x;
  }
  require(sq > 0.0, ErrorCode::kNumeric, "cannot normalize a zero embedding");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : values) x *= inv;
  return Embedding(std::move(values));
}

PromptPair build_prompt_pair(std::string_view class_name, std::string_view template_pos,
                             std::string_view template_neg) {
  require(!class_name.empty(), ErrorCode::kInput, "class name must be nonempty");
  for (std::string_view t : {template_pos, template_neg}) {
    require(count_occurrences(t, kPlaceholder) == 1, ErrorCode::kTemplate,
            "template must contain \"{cls}\" exactly once: \"" + std::string(t) + "\"");
  }
  PromptPair pair{std::string(class_name), substitute(template_pos, class_name),
                  substitute(template_neg, class_name)};
  require(pair.positive_text != pair.negative_text, ErrorCode::kTemplate,
          "positive and negative prompts must differ");
  return pair;
}

PixelRect crop_rect(const Box& box, int image_width, int image_height, const CropPolicy& policy) {
  require(box.w > 0.0 && box.h > 0.0, ErrorCode::kInput, "zero-area crop");
  Box b = box;
  if (policy.square_pad) {
    double side = std::max(b.w, b.h);
    b = Box{b.cx() - 0.5 * side, b.cy() - 0.5 * side, side, side};
  }
  PixelRect r;
  r.x0 = std::clamp(static_cast<int>(std::floor(b.x)), 0, image_width);
  r.y0 = std::clamp(static_cast<int>(std::floor(b.y)), 0, image_height);
  r.x1 = std::clamp(static_cast<int>(std::ceil(b.x2())), 0, image_width);
  r.y1 = std::clamp(static_cast<int>(std::ceil(b.y2())), 0, image_height);
  require(!r.empty(), ErrorCode::kInput, "crop is empty after clipping to image bounds");
  return r;
}

Image prepare_crop(const Image& image, const Box& box, const CropPolicy& policy) {
  Image pixels = crop(image, crop_rect(box, image.width, image.height, policy));
  return resize_bilinear(pixels, policy.target_size, policy.target_size);
}

std::vector<Embedding> EmbeddingProvider::encode_texts(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(encode_text(t));
  return out;
}

Embedding EmbeddingProvider::encode_image_crop(const Image& image, const Box& box, const CropHints& hints) const {
  return encode_prepared_crop(prepare_crop(image, box, crop_policy()), hints);
}

StubProvider::StubProvider(std::uint64_t seed, std::size_t dim, double noise, int input_size)
    : seed_(seed), noise_(noise), input_size_(input_size) {
  require(dim > 0, ErrorCode::kConfig, "stub embedding dimension must be positive");
  require(noise >= 0.0 && std::isfinite(noise), ErrorCode::kConfig, "stub noise must be nonnegative");
  require(input_size > 0, ErrorCode::kConfig, "stub input size must be positive");
  descriptor_ = ProviderDescriptor{"stub:" + std::to_string(seed), dim, true};
}

Embedding StubProvider::encode_text(std::string_view text) const {
  require(!text.empty(), ErrorCode::kInput, "text must be nonempty");
  std::string key(text);
  std::istringstream tokens{key};
  std::vector<std::string> words;
  for (std::string w; tokens >> w;) words.push_back(w);
  if (words.size() > kTokenLimit) {
    warn("text exceeds " + std::to_string(kTokenLimit) + " tokens; truncated");
    key.clear();
    for (std::size_t i = 0; i < kTokenLimit; ++i) {
      if (i) key += ' ';
      key += words[i];
    }
  }
  return Embedding::normalized(gaussian_direction(fnv1a64(key, mix_seed(seed_, 0x7e47)), dim()));
}

double StubProvider::contrast_degradation(const Image& crop) {
  double sum = 0.0, sq = 0.0;
  const std::size_t n = static_cast<std::size_t>(crop.width) * crop.height;
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      double lum = 0.0;
      for (int c = 0; c < crop.channels; ++c) lum += crop.at(x, y, c);
      lum /= crop.channels;
      sum += lum;
      sq += lum * lum;
    }
  }
  double mean = sum / n;
  double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
  return std::clamp(1.0 - 4.0 * sd, 0.0, 1.0);
}

Embedding StubProvider::encode_prepared_crop(const Image& crop, const CropHints& hints) const {
  require(!crop.empty(), ErrorCode::kInput, "zero-area crop");
  std::vector<unsigned char> bytes = to_bytes(crop);
  const std::uint64_t pixel_hash =
      fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), mix_seed(seed_, 0x1a6e));
  const std::size_t d = dim();

  std::vector<double> v(d, 0.0);
  if (hints.prompts) {
    const double g = std::clamp(hints.degradation.value_or(contrast_degradation(crop)), 0.0, 1.0);
    Embedding pos = encode_text(hints.prompts->positive_text);
    Embedding neg = encode_text(hints.prompts->negative_text);
    for (std::size_t i = 0; i < d; ++i) v[i] = (1.0 - g) * pos[i] + g * neg[i];
  } else {
    v = gaussian_direction(pixel_hash ^ 0x5bd1e995ULL, d);
  }
  if (noise_ > 0.0) {
    std::vector<double> eps = gaussian_direction(pixel_hash, d);
    const double scale = noise_ / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i) v[i] += scale * eps[i];
  }
  return Embedding::normalized(std::move(v));
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view backend, std::size_t dim) {
  if (backend == "real") {
    fail(ErrorCode::kProvider,
         "backend \"real\" is unavailable: this build ships no pretrained encoder weights; use \"stub:<seed>\"");
  }
  constexpr std::string_view kStub = "stub:";
  if (backend.starts_with(kStub)) {
    std::string_view digits = backend.substr(kStub.size());
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    require(ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty(), ErrorCode::kConfig,
            "invalid stub seed in backend \"" + std::string(backend) + "\"");
    return std::make_unique<StubProvider>(seed, dim);
  }
  fail(ErrorCode::kConfig, "unknown embeddings backend \"" + std::string(backend) + "\"");
}

}  // namespace clipce::embedding
