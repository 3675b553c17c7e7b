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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ame/ame.hpp"

namespace clipce::loss {

inline constexpr double kProbEpsilon = 1e-7;

// Class probabilities for one proposal (index 0 is background in the
// reference detector) and the index of the target class.
struct ClassificationOutput {
  std::vector<double> probs;
  std::size_t gt_index = 0;

  double p_t() const { return probs[gt_index]; }
};

void validate(const ClassificationOutput& out);

// Epochs are 1-based: epochs 1..pretrain_epochs use the AME weight with
// alpha1, later epochs up to total_epochs use the FAME weight with alpha2.
struct ClipCeSchedule {
  double alpha1 = 0.5;
  double alpha2 = 1.0;
  int pretrain_epochs = 15;
  int total_epochs = 20;
};

void validate(const ClipCeSchedule& sched);

enum class Branch { kAme, kFame };

const char* branch_name(Branch b);
Branch active_branch(int epoch, const ClipCeSchedule& sched);

enum class LossKind { kCe, kFocal, kClipCe };

const char* loss_kind_name(LossKind k);
LossKind parse_loss_kind(const std::string& name);

double ce_loss(const ClassificationOutput& out);
double focal_loss(const ClassificationOutput& out, const ame::FocalParams& params);

// e^(alpha * w) for the branch active at `epoch`.
double clipce_multiplier(const ame::WeightRecord& weights, int epoch, const ClipCeSchedule& sched);
double clipce_loss(const ClassificationOutput& out, const ame::WeightRecord& weights, int epoch,
                   const ClipCeSchedule& sched);

// Proposals matched to a ground-truth object carry its weights; background
// proposals carry none and fall back to plain CE.
struct ProposalTerm {
  ClassificationOutput out;
  std::optional<ame::WeightRecord> weights;
};

struct BatchLoss {
  double loss = 0.0;
  std::size_t positives = 0;
  std::size_t background = 0;
  std::size_t ame_terms = 0;
  std::size_t fame_terms = 0;
  double mean_active_weight = 0.0;  // over positives
};

// Mean over proposals of clipce_loss (positives) and ce_loss (background).
BatchLoss batch_detection_class_loss(std::span<const ProposalTerm> batch, int epoch, const ClipCeSchedule& sched);

std::vector<double> softmax(std::span<const double> logits);

// Gradient of multiplier * (-log p_t) with respect to the logits that produced
// `probs`; zero when p_t sits below the clamp.
std::vector<double> weighted_ce_logit_gradient(std::span<const double> probs, std::size_t gt_index,
                                               double multiplier);
std::vector<double> focal_logit_gradient(std::span<const double> probs, std::size_t gt_index,
                                         const ame::FocalParams& params);

}  // namespace clipce::loss
