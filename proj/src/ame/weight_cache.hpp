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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ame/ame.hpp"
#include "data/manifest.hpp"
#include "embedding/embedding.hpp"

namespace clipce::ame {

inline constexpr const char* kWeightCacheSchema = "weight_cache/v1";
inline constexpr int kWeightCacheVersion = 1;

// First line of the cache file. Any mismatch in backend, dimension, templates
// or manifest invalidates the cache.
struct WeightCacheHeader {
  std::string backend_id;
  std::size_t dim = 0;
  std::string template_pos;
  std::string template_neg;
  int version = kWeightCacheVersion;
  std::string templates_hash;
  std::string manifest_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
  bool partial = false;
};

struct CacheRecord {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  std::string class_name;
  double sim_pos = 0.0;
  double sim_neg = 0.0;
  double w_ame = 0.5;
};

class WeightCache {
 public:
  WeightCacheHeader header;

  void append(CacheRecord record);
  const std::vector<CacheRecord>& records() const { return records_; }
  const CacheRecord* find(std::int64_t image_id, std::int64_t annotation_id) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<CacheRecord> records_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> index_;
};

std::string templates_hash(const std::string& template_pos, const std::string& template_neg);

std::string serialize(const WeightCache& cache);
WeightCache parse_weight_cache(const std::string& text);
void write_weight_cache(const std::filesystem::path& path, const WeightCache& cache);
WeightCache read_weight_cache(const std::filesystem::path& path);

// True when `cache` was produced with the same backend, dimension, templates
// and manifest as `expected` and is complete.
bool compatible(const WeightCacheHeader& cache, const WeightCacheHeader& expected);

struct PrecomputeReport {
  std::size_t processed = 0;
  std::vector<std::string> item_errors;
  bool aborted = false;
  std::string abort_reason;
};

// One record per annotation. Per-image read failures are collected and the run
// continues; a provider failure stops the run and marks the cache partial.
WeightCache precompute_ame_weights(const data::DatasetManifest& manifest, const embedding::EmbeddingProvider& provider,
                                   const std::string& template_pos, const std::string& template_neg,
                                   PrecomputeReport* report = nullptr);

}  // namespace clipce::ame
