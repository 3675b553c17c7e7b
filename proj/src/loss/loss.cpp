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

#include "loss/loss.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace clipce::loss {

namespace {

double clamped_nll(double p) { return -std::log(std::max(p, kProbEpsilon)); }

}  // namespace

void validate(const ClassificationOutput& out) {
  require(out.gt_index < out.probs.size(), ErrorCode::kInput, "gt_index out of range");
  double sum = 0.0;
  for (double p : out.probs) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, ErrorCode::kInput, "probabilities must lie in [0, 1]");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-5, ErrorCode::kInput, "probabilities must sum to 1");
}

void validate(const ClipCeSchedule& s) {
  require(s.alpha1 >= 0.0 && s.alpha2 >= 0.0, ErrorCode::kConfig, "alpha values must be nonnegative");
  require(s.pretrain_epochs > 0 && s.pretrain_epochs <= s.total_epochs, ErrorCode::kConfig,
          "schedule requires 0 < pretrain_epochs <= total_epochs");
}

const char* branch_name(Branch b) { return b == Branch::kAme ? "ame" : "fame"; }

Branch active_branch(int epoch, const ClipCeSchedule& sched) {
  validate(sched);
  require(epoch > 0 && epoch <= sched.total_epochs, ErrorCode::kInput,
          "epoch " + std::to_string(epoch) + " outside (0, " + std::to_string(sched.total_epochs) + "]");
  return epoch <= sched.pretrain_epochs ? Branch::kAme : Branch::kFame;
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kCe: return "ce";
    case LossKind::kFocal: return "focal";
    case LossKind::kClipCe: return "clipce";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "ce") return LossKind::kCe;
  if (name == "focal") return LossKind::kFocal;
  if (name == "clipce") return LossKind::kClipCe;
  fail(ErrorCode::kConfig, "loss.kind must be one of ce, focal, clipce (got \"" + name + "\")");
}

double ce_loss(const ClassificationOutput& out) {
  validate(out);
  return clamped_nll(out.p_t());
}

double focal_loss(const ClassificationOutput& out, const ame::FocalParams& params) {
  validate(out);
  const double p = std::max(out.p_t(), kProbEpsilon);
  return ame::focal_weight(p, params) * clamped_nll(p);
}

double clipce_multiplier(const ame::WeightRecord& weights, int epoch, const ClipCeSchedule& sched) {
  if (active_branch(epoch, sched) == Branch::kAme) return std::exp(sched.alpha1 * weights.w_ame);
  require(weights.w_fame.has_value(), ErrorCode::kState,
          "epoch " + std::to_string(epoch) + " needs the FAME weight but the adapter pathway has not run");
  return std::exp(sched.alpha2 * *weights.w_fame);
}

double clipce_loss(const ClassificationOutput& out, const ame::WeightRecord& weights, int epoch,
                   const ClipCeSchedule& sched) {
  const double m = clipce_multiplier(weights, epoch, sched);
  return m * ce_loss(out);
}

BatchLoss batch_detection_class_loss(std::span<const ProposalTerm> batch, int epoch, const ClipCeSchedule& sched) {
  require(!batch.empty(), ErrorCode::kInput, "empty proposal batch");
  const Branch branch = active_branch(epoch, sched);
  BatchLoss result;
  double weight_sum = 0.0;
  for (const ProposalTerm& term : batch) {
    if (term.weights) {
      result.loss += clipce_loss(term.out, *term.weights, epoch, sched);
      ++result.positives;
      if (branch == Branch::kAme) {
        ++result.ame_terms;
        weight_sum += term.weights->w_ame;
      } else {
        ++result.fame_terms;
        weight_sum += *term.weights->w_fame;
      }
    } else {
      result.loss += ce_loss(term.out);
      ++result.background;
    }
  }
  result.loss /= static_cast<double>(batch.size());
  if (result.positives > 0) result.mean_active_weight = weight_sum / static_cast<double>(result.positives);
  return result;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorCode::kInput, "softmax of an empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::vector<double> weighted_ce_logit_gradient(std::span<const double> probs, std::size_t gt_index,
                                               double multiplier) {
  std::vector<double> g(probs.size(), 0.0);
  if (probs[gt_index] < kProbEpsilon) return g;
  for (std::size_t c = 0; c < probs.size(); ++c) g[c] = multiplier * probs[c];
  g[gt_index] -= multiplier;
  return g;
}

std::vector<double> focal_logit_gradient(std::span<const double> probs, std::size_t gt_index,
                                         const ame::FocalParams& params) {
  std::vector<double> g(probs.size(), 0.0);
  const double p = probs[gt_index];
  if (p < kProbEpsilon || p >= 1.0) return g;
  const double gamma = params.gamma;
  // d/dp [(1-p)^gamma * (-log p)]
  const double dfdp = (gamma == 0.0 ? 0.0 : gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p)) -
                      std::pow(1.0 - p, gamma) / p;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double dp_dz = p * ((c == gt_index ? 1.0 : 0.0) - probs[c]);
    g[c] = dfdp * dp_dz;
  }
  return g;
}

}  // namespace clipce::loss
