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

#include "ame/ame.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace clipce::ame {

double similarity(std::span<const double> visual, std::span<const double> text) {
  require(visual.size() == text.size(), ErrorCode::kInput,
          "similarity dimension mismatch: " + std::to_string(visual.size()) + " vs " + std::to_string(text.size()));
  double dot = 0.0;
  for (std::size_t i = 0; i < visual.size(); ++i) dot += visual[i] * text[i];
  return dot;
}

double similarity(const embedding::Embedding& visual, const embedding::Embedding& text) {
  return similarity(visual.values(), text.values());
}

double negative_score(double pos, double neg) {
  require(std::isfinite(pos) && std::isfinite(neg), ErrorCode::kInput, "similarities must be finite");
  const double m = std::max(pos, neg);
  const double en = std::exp(neg - m);
  const double ep = std::exp(pos - m);
  return en / (en + ep);
}

double ame_weight(const SimilarityPair& sims) { return negative_score(sims.sim_pos, sims.sim_neg); }

double focal_weight(double p_t, const FocalParams& params) {
  require(p_t >= 0.0 && p_t <= 1.0, ErrorCode::kInput, "p_t must lie in [0, 1]");
  require(params.gamma >= 0.0, ErrorCode::kInput, "gamma must be nonnegative");
  return std::pow(1.0 - p_t, params.gamma);
}

}  // namespace clipce::ame
