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

#include "ame/ame.hpp"
#include "ame/weight_cache.hpp"
#include "common/box.hpp"
#include "common/io.hpp"
#include "data/manifest.hpp"
#include "detect/detector.hpp"
#include "embedding/embedding.hpp"
#include "fame/adapter.hpp"
#include "loss/loss.hpp"

namespace clipce::detect {

struct TrainConfig {
  loss::LossKind loss_kind = loss::LossKind::kClipCe;
  loss::ClipCeSchedule schedule;
  ame::FocalParams focal;
  fame::SoftLabelParams soft_label;

  int batch_size = 4;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double grad_clip = 10.0;  // global L2 norm; <= 0 disables

  int rpn_batch = 64;
  double rpn_positive_fraction = 0.5;
  double rpn_positive_iou = 0.5;
  double rpn_negative_iou = 0.3;
  int roi_batch = 32;
  double roi_positive_fraction = 0.25;
  double positive_iou = 0.5;  // proposal counts as positive above this

  std::string template_pos{embedding::kDefaultPositiveTemplate};
  std::string template_neg{embedding::kDefaultNegativeTemplate};

  std::uint64_t seed = 0;
  std::string config_hash;
  std::filesystem::path out_dir;  // train_log.jsonl and ckpt/; empty keeps everything in memory
  bool checkpoint_each_epoch = true;
};

void validate(const TrainConfig& config);

// Per-step view of one ground-truth object.
struct ObjectRecord {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  int class_index = 0;
  Box gt_box;
  std::optional<std::vector<double>> matched_roi;
  std::optional<double> p_t;
};

// Last values an object saw during an epoch.
struct ObjectLog {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  std::optional<double> degradation;
  bool matched = false;
  double p_t = 0.0;  // from the matched proposal, else from the ground-truth box
  double w_ame = 0.5;
  std::optional<double> w_offset;
  std::optional<double> w_active;  // weight that entered the CLIP-CE term
};

struct EpochLog {
  int epoch = 0;
  std::string branch;
  double rpn_loss = 0.0;
  double bbox_loss = 0.0;
  double cls_loss = 0.0;
  double adapter_loss = 0.0;
  double total_loss = 0.0;
  double mean_active_weight = 0.0;
  std::size_t ame_terms = 0;
  std::size_t fame_terms = 0;
  std::size_t matched_objects = 0;
  std::size_t unmatched_objects = 0;
  std::vector<ObjectLog> objects;
};

Json to_json(const EpochLog& log, const TrainConfig& config);
EpochLog epoch_log_from_json(const Json& j);
std::vector<EpochLog> read_train_log(const std::filesystem::path& path);

struct TrainResult {
  std::vector<EpochLog> epochs;
  bool used_weight_cache = false;
};

// Header a weight cache must match to be used for `manifest` and `provider`.
ame::WeightCacheHeader expected_cache_header(const data::DatasetManifest& manifest,
                                             const embedding::EmbeddingProvider& provider,
                                             const std::string& template_pos, const std::string& template_neg);

// Runs epochs 1..schedule.total_epochs. The adapter is stepped on the matched
// objects of every mini-batch; its weights only reach the detector loss in
// the FAME phase of a CLIP-CE run. `cache` may be null or stale, in which case
// AME weights are computed from the provider.
TrainResult train(const data::DatasetManifest& manifest, TwoStageDetector& detector,
                  const embedding::EmbeddingProvider& provider, fame::Adapter& adapter, const ame::WeightCache* cache,
                  const TrainConfig& config);

}  // namespace clipce::detect
