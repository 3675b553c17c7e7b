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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ame/weight_cache.hpp"
#include "common/box.hpp"
#include "common/io.hpp"
#include "data/manifest.hpp"
#include "detect/detector.hpp"
#include "detect/trainer.hpp"

namespace clipce::eval {

inline constexpr double kDefaultIouThreshold = 0.5;

struct ScoredBox {
  std::int64_t image_id = 0;
  Box box;
  double score = 0.0;
};

struct GroundTruthBox {
  std::int64_t image_id = 0;
  Box box;
};

struct ApResult {
  double ap = 0.0;
  std::size_t matched = 0;
};

// All-point interpolated AP for one class. Detections are visited in the
// given order (callers sort by descending score); each takes the unmatched
// ground truth of its image with the highest IoU, if that IoU reaches the
// threshold.
ApResult average_precision(std::span<const ScoredBox> detections, std::span<const GroundTruthBox> gts,
                           double iou_threshold = kDefaultIouThreshold);

struct Counts {
  std::size_t gt = 0;
  std::size_t detections = 0;
  std::size_t matched = 0;
};

struct EvalReport {
  std::map<std::string, double> per_class_ap;  // classes with at least one ground truth
  std::vector<std::string> excluded_classes;   // no ground truth
  double map50 = 0.0;
  Counts counts;
};

struct EvalOptions {
  double score_threshold = 0.05;
  double nms_iou = 0.5;
  double iou_threshold = kDefaultIouThreshold;
};

EvalReport evaluate_detections(const data::DatasetManifest& manifest,
                               const std::map<std::int64_t, std::vector<detect::Detection>>& detections,
                               double iou_threshold = kDefaultIouThreshold);
EvalReport evaluate(const detect::Detector& detector, const data::DatasetManifest& manifest,
                    const EvalOptions& options = {});

Json to_json(const EvalReport& report);

// Average ranks (ties share the mean rank). Null when either side is constant
// or fewer than two pairs are given.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct WeightReportRow {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  std::string class_name;
  std::optional<double> degradation;
  double w_ame = 0.5;
  double focal_w = 0.0;
  double p_t = 0.0;
};

struct WeightReport {
  std::vector<WeightReportRow> rows;
  std::size_t skipped = 0;  // cache records or log objects without a join partner
  int epoch = 0;            // training epoch p_t was taken from; 0 without a log
  std::optional<double> spearman_w_ame;
  std::optional<double> spearman_focal;
};

// Joins cache weights with p_t from `epoch` of the training log (last epoch
// when 0). The degradation proxy comes from `manifest` when given, else from
// the log.
WeightReport weight_analysis(const ame::WeightCache& cache, std::span<const detect::EpochLog> log,
                             const data::DatasetManifest* manifest = nullptr, int epoch = 0);

std::string to_csv(const WeightReport& report);
Json summary_json(const WeightReport& report);

}  // namespace clipce::eval
