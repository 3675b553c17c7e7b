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

#include "ame/weight_cache.hpp"

#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "common/log.hpp"

namespace clipce::ame {

namespace fs = std::filesystem;

void WeightCache::append(CacheRecord record) {
  auto key = std::make_pair(record.image_id, record.annotation_id);
  require(!index_.contains(key), ErrorCode::kInput,
          "duplicate weight record for annotation " + std::to_string(record.annotation_id));
  index_.emplace(key, records_.size());
  records_.push_back(std::move(record));
}

const CacheRecord* WeightCache::find(std::int64_t image_id, std::int64_t annotation_id) const {
  auto it = index_.find({image_id, annotation_id});
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::string templates_hash(const std::string& template_pos, const std::string& template_neg) {
  return sha256_hex(template_pos + '\n' + template_neg);
}

std::string serialize(const WeightCache& cache) {
  const WeightCacheHeader& h = cache.header;
  Json header = {{"schema", kWeightCacheSchema},
                 {"backend_id", h.backend_id},
                 {"dim", h.dim},
                 {"template_pos", h.template_pos},
                 {"template_neg", h.template_neg},
                 {"version", h.version},
                 {"templates_hash", h.templates_hash},
                 {"manifest_hash", h.manifest_hash},
                 {"config_hash", h.config_hash},
                 {"seed", h.seed},
                 {"tool_version", kToolVersion},
                 {"partial", h.partial}};
  std::string out = header.dump() + "\n";
  for (const CacheRecord& r : cache.records()) {
    Json j = {{"image_id", r.image_id}, {"annotation_id", r.annotation_id}, {"class", r.class_name},
              {"sim_pos", r.sim_pos},   {"sim_neg", r.sim_neg},             {"w_ame", r.w_ame}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

WeightCache parse_weight_cache(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  WeightCache cache;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json j = Json::parse(line);
      if (!have_header) {
        require(j.value("schema", "") == kWeightCacheSchema, ErrorCode::kParse, "not a weight cache file");
        WeightCacheHeader& h = cache.header;
        h.backend_id = j.at("backend_id").get<std::string>();
        h.dim = j.at("dim").get<std::size_t>();
        h.template_pos = j.at("template_pos").get<std::string>();
        h.template_neg = j.at("template_neg").get<std::string>();
        h.version = j.at("version").get<int>();
        h.templates_hash = j.value("templates_hash", "");
        h.manifest_hash = j.value("manifest_hash", "");
        h.config_hash = j.value("config_hash", "");
        h.seed = j.value("seed", std::uint64_t{0});
        h.partial = j.value("partial", false);
        have_header = true;
        continue;
      }
      cache.append(CacheRecord{j.at("image_id").get<std::int64_t>(), j.at("annotation_id").get<std::int64_t>(),
                               j.at("class").get<std::string>(), j.at("sim_pos").get<double>(),
                               j.at("sim_neg").get<double>(), j.at("w_ame").get<double>()});
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed weight cache: ") + e.what());
  }
  require(have_header, ErrorCode::kParse, "weight cache has no header line");
  return cache;
}

void write_weight_cache(const fs::path& path, const WeightCache& cache) { write_text(path, serialize(cache)); }

WeightCache read_weight_cache(const fs::path& path) { return parse_weight_cache(read_text(path)); }

bool compatible(const WeightCacheHeader& cache, const WeightCacheHeader& expected) {
  return !cache.partial && cache.version == expected.version && cache.backend_id == expected.backend_id &&
         cache.dim == expected.dim && cache.template_pos == expected.template_pos &&
         cache.template_neg == expected.template_neg && cache.manifest_hash == expected.manifest_hash;
}

WeightCache precompute_ame_weights(const data::DatasetManifest& manifest, const embedding::EmbeddingProvider& provider,
                                   const std::string& template_pos, const std::string& template_neg,
                                   PrecomputeReport* report) {
  PrecomputeReport local;
  PrecomputeReport& rep = report ? *report : local;

  WeightCache cache;
  cache.header.backend_id = provider.descriptor().backend_id;
  cache.header.dim = provider.dim();
  cache.header.template_pos = template_pos;
  cache.header.template_neg = template_neg;
  cache.header.templates_hash = templates_hash(template_pos, template_neg);
  cache.header.manifest_hash = manifest_hash(manifest);

  std::vector<embedding::PromptPair> prompts;
  std::vector<embedding::Embedding> t_pos;
  std::vector<embedding::Embedding> t_neg;
  try {
    for (const std::string& name : manifest.class_names) {
      prompts.push_back(embedding::build_prompt_pair(name, template_pos, template_neg));
      t_pos.push_back(provider.encode_text(prompts.back().positive_text));
      t_neg.push_back(provider.encode_text(prompts.back().negative_text));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kProvider) throw;
    rep.aborted = true;
    rep.abort_reason = e.what();
    cache.header.partial = true;
    return cache;
  }

  for (const data::ManifestEntry& entry : manifest.entries) {
    if (entry.annotations.empty()) continue;
    Image image;
    try {
      image = read_png(manifest.image_file(entry));
    } catch (const Error& e) {
      rep.item_errors.push_back("image_id " + std::to_string(entry.image_id) + ": " + e.what());
      continue;
    }
    for (const data::Annotation& a : entry.annotations) {
      const auto ci = static_cast<std::size_t>(a.class_index);
      embedding::CropHints hints{a.degradation, prompts[ci]};
      try {
        embedding::Embedding v = provider.encode_image_crop(image, a.bbox, hints);
        SimilarityPair sims{similarity(v, t_pos[ci]), similarity(v, t_neg[ci])};
        cache.append(CacheRecord{entry.image_id, a.annotation_id, manifest.class_names[ci], sims.sim_pos,
                                 sims.sim_neg, ame_weight(sims)});
        ++rep.processed;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kProvider) {
          rep.aborted = true;
          rep.abort_reason = e.what();
          cache.header.partial = true;
          return cache;
        }
        rep.item_errors.push_back("annotation " + std::to_string(a.annotation_id) + ": " + e.what());
      }
    }
  }
  for (const std::string& msg : rep.item_errors) warn(msg);
  return cache;
}

}  // namespace clipce::ame
