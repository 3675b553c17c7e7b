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

#include <cstdint>
#include <optional>
#include <span>

#include "embedding/embedding.hpp"

namespace clipce::ame {

struct SimilarityPair {
  double sim_pos = 0.0;
  double sim_neg = 0.0;
};

struct WeightRecord {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  SimilarityPair similarities;
  double w_ame = 0.5;
  std::optional<double> w_offset;
  std::optional<double> w_fame;
};

struct FocalParams {
  double gamma = 2.0;
};

double similarity(std::span<const double> visual, std::span<const double> text);
double similarity(const embedding::Embedding& visual, const embedding::Embedding& text);

// Two-way softmax score of `neg` against `pos`, e^neg / (e^neg + e^pos),
// shifted by the max for stability. Shared by the AME and offset weights.
double negative_score(double pos, double neg);

double ame_weight(const SimilarityPair& sims);

// (1 - p_t)^gamma.
double focal_weight(double p_t, const FocalParams& params);

}  // namespace clipce::ame
