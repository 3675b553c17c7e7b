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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common/box.hpp"
#include "image/image.hpp"

namespace clipce::embedding {

// Unit-norm, finite vector. Construct through `normalized()` so the invariant
// holds for every instance a provider hands out.
class Embedding {
 public:
  Embedding() = default;

  static Embedding normalized(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

struct PromptPair {
  std::string class_name;
  std::string positive_text;
  std::string negative_text;
};

inline constexpr std::string_view kDefaultPositiveTemplate = "a photo of a {cls}";
inline constexpr std::string_view kDefaultNegativeTemplate = "a photo without {cls}";

PromptPair build_prompt_pair(std::string_view class_name, std::string_view template_pos,
                             std::string_view template_neg);

struct ProviderDescriptor {
  std::string backend_id;
  std::size_t embedding_dim = 0;
  bool deterministic = false;
};

// Square-pad the box, clip to the image, resize to target_size x target_size.
struct CropPolicy {
  bool square_pad = true;
  int target_size = 224;
};

// Side information a test fixture may attach to a crop. Pretrained encoders
// ignore it; the stub backend uses it to place the crop embedding.
struct CropHints {
  std::optional<double> degradation;
  std::optional<PromptPair> prompts;
};

PixelRect crop_rect(const Box& box, int image_width, int image_height, const CropPolicy& policy);
Image prepare_crop(const Image& image, const Box& box, const CropPolicy& policy);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const ProviderDescriptor& descriptor() const = 0;
  virtual Embedding encode_text(std::string_view text) const = 0;
  // `crop` is already prepared according to the provider's crop policy.
  virtual Embedding encode_prepared_crop(const Image& crop, const CropHints& hints) const = 0;
  virtual CropPolicy crop_policy() const = 0;

  std::size_t dim() const { return descriptor().embedding_dim; }

  std::vector<Embedding> encode_texts(std::span<const std::string> texts) const;
  Embedding encode_image_crop(const Image& image, const Box& box, const CropHints& hints = {}) const;
};

// Deterministic backend for tests and desk-scale runs. Text embeddings are
// hash-seeded Gaussian directions; crop embeddings interpolate between the
// class's positive and negative prompt embeddings by a degradation score.
class StubProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kTokenLimit = 77;

  StubProvider(std::uint64_t seed, std::size_t dim, double noise = 0.05, int input_size = 32);

  const ProviderDescriptor& descriptor() const override { return descriptor_; }
  Embedding encode_text(std::string_view text) const override;
  Embedding encode_prepared_crop(const Image& crop, const CropHints& hints) const override;
  CropPolicy crop_policy() const override { return CropPolicy{true, input_size_}; }

  // Degradation estimate used when no hint is supplied: low luminance
  // contrast reads as degraded.
  static double contrast_degradation(const Image& crop);

 private:
  std::uint64_t seed_;
  double noise_;
  int input_size_;
  ProviderDescriptor descriptor_;
};

inline constexpr std::size_t kDefaultStubDim = 64;

// backend: "real" or "stub:<seed>". `dim` is used by stub backends only.
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view backend, std::size_t dim = kDefaultStubDim);

}  // namespace clipce::embedding
