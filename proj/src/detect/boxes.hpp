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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "common/box.hpp"

namespace clipce::detect {

// Intersection over union; 0 when either box has zero area.
double iou(const Box& a, const Box& b);

// Greedy non-maximum suppression. Returns kept indices ordered by descending
// score (ties broken by lower index).
std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_threshold);

struct ProposalMatch {
  std::optional<std::size_t> proposal;
  double iou = 0.0;
};

// For each ground-truth box, the proposal with the highest IoU if that IoU
// strictly exceeds `threshold`. Ties go to the lower proposal index.
std::vector<ProposalMatch> match_positive_proposals(std::span<const Box> proposals, std::span<const Box> gts,
                                                    double threshold = 0.5);

using Deltas = std::array<double, 4>;

// Center/size box parameterization relative to a reference box.
Deltas encode_deltas(const Box& reference, const Box& target);
Box decode_deltas(const Box& reference, const Deltas& deltas);

struct Detection {
  Box box;
  int class_index = 0;  // dataset class index (no background)
  double score = 0.0;
};

// Class-wise NMS, then sort by descending score.
std::vector<Detection> classwise_nms(std::vector<Detection> detections, double iou_threshold);

}  // namespace clipce::detect
