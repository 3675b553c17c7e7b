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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "loss/loss.hpp"
#include "support/oracles.hpp"

namespace clipce::loss {
namespace {

ClassificationOutput binary(double p_t) { return ClassificationOutput{{1.0 - p_t, p_t}, 1}; }

ame::WeightRecord weights(double w_ame, std::optional<double> w_fame = {}) {
  ame::WeightRecord r;
  r.w_ame = w_ame;
  r.w_fame = w_fame;
  return r;
}

TEST(CeLoss, Examples) {
  EXPECT_EQ(ce_loss(binary(1.0)), 0.0);
  EXPECT_NEAR(ce_loss(binary(0.5)), 0.693147, 1e-6);
  EXPECT_NEAR(ce_loss(binary(std::exp(-3.0))), 3.0, 1e-12);
  EXPECT_NEAR(ce_loss(binary(0.0)), oracle::ce(0.0), 1e-9);
  EXPECT_TRUE(std::isfinite(ce_loss(binary(0.0))));
}

TEST(CeLoss, RejectsInvalidOutputs) {
  EXPECT_THROW(ce_loss(ClassificationOutput{{0.5, 0.6}, 0}), Error);
  EXPECT_THROW(ce_loss(ClassificationOutput{{0.5, 0.5}, 2}), Error);
  EXPECT_THROW(ce_loss(ClassificationOutput{{-0.1, 1.1}, 0}), Error);
}

TEST(FocalLoss, Examples) {
  EXPECT_EQ(focal_loss(binary(1.0), {2.0}), 0.0);
  EXPECT_NEAR(focal_loss(binary(0.9), {2.0}), 0.00105361, 1e-8);
  EXPECT_NEAR(focal_loss(binary(0.9), {2.0}), oracle::focal(0.9, 2.0), 1e-15);
  SplitMix64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform();
    EXPECT_EQ(focal_loss(binary(p), {0.0}), ce_loss(binary(p)));
    const double g = rng.uniform(0, 5);
    EXPECT_LE(focal_loss(binary(p), {g}), ce_loss(binary(p)));
  }
}

TEST(ClipCeLoss, Examples) {
  const ClipCeSchedule zero{0.0, 0.0, 15, 20};
  SplitMix64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const double p = rng.uniform(0.01, 1.0);
    const auto w = weights(rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99));
    EXPECT_EQ(clipce_loss(binary(p), w, 1, zero), ce_loss(binary(p)));
    EXPECT_EQ(clipce_loss(binary(p), w, 20, zero), ce_loss(binary(p)));
  }
  const ClipCeSchedule s{0.5, 1.0, 15, 20};
  // e^0.4 * ln 2 = 1.0340541...
  EXPECT_NEAR(clipce_loss(binary(0.5), weights(0.8), 1, s), 1.034054, 1e-6);
  EXPECT_NEAR(clipce_loss(binary(0.5), weights(0.8), 1, s), oracle::clipce(0.5, 0.8, 0.0, 1, 0.5, 1.0, 15), 1e-12);
}

TEST(ClipCeLoss, BranchSelection) {
  const ClipCeSchedule s{0.5, 1.0, 15, 20};
  const auto w = weights(0.1, 0.9);
  EXPECT_NEAR(clipce_loss(binary(0.5), w, 15, s), std::exp(0.5 * 0.1) * std::log(2.0), 1e-12);
  EXPECT_NEAR(clipce_loss(binary(0.5), w, 16, s), std::exp(1.0 * 0.9) * std::log(2.0), 1e-12);
  EXPECT_EQ(active_branch(15, s), Branch::kAme);
  EXPECT_EQ(active_branch(16, s), Branch::kFame);
  int ame = 0, fame = 0;
  for (int e = 1; e <= 20; ++e) (active_branch(e, s) == Branch::kAme ? ame : fame)++;
  EXPECT_EQ(ame, 15);
  EXPECT_EQ(fame, 5);
  try {
    clipce_loss(binary(0.5), weights(0.1), 16, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  EXPECT_THROW(clipce_loss(binary(0.5), w, 0, s), Error);
  EXPECT_THROW(clipce_loss(binary(0.5), w, 21, s), Error);
}

TEST(ClipCeLoss, MatchesOracleAndFactorizes) {
  SplitMix64 rng(3);
  const ClipCeSchedule s{2.0, 2.0, 3, 6};
  for (int i = 0; i < 300; ++i) {
    const double p = rng.uniform(0.001, 0.999);
    const double wa = rng.uniform(0.001, 0.999);
    const double wf = rng.uniform(0.001, 0.999);
    const int epoch = 1 + static_cast<int>(rng.below(6));
    const double l = clipce_loss(binary(p), weights(wa, wf), epoch, s);
    EXPECT_NEAR(l, oracle::clipce(p, wa, wf, epoch, 2.0, 2.0, 3), 1e-12 * (1 + l));
    const double active = epoch <= 3 ? wa : wf;
    EXPECT_NEAR(l / ce_loss(binary(p)), std::exp(2.0 * active), 1e-12 * std::exp(2.0 * active));
  }
}

TEST(ClipCeLoss, Monotonicity) {
  const ClipCeSchedule s{1.0, 1.0, 15, 20};
  double prev = 0;
  for (int i = 1; i < 100; ++i) {
    const double l = clipce_loss(binary(0.4), weights(i / 100.0), 1, s);
    EXPECT_GT(l, prev);
    prev = l;
  }
  prev = 1e9;
  for (int i = 1; i < 100; ++i) {
    const double l = clipce_loss(binary(i / 100.0), weights(0.6), 1, s);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(Schedule, Validation) {
  EXPECT_THROW(validate(ClipCeSchedule{0.5, 1.0, 0, 20}), Error);
  EXPECT_THROW(validate(ClipCeSchedule{0.5, 1.0, 21, 20}), Error);
  EXPECT_THROW(validate(ClipCeSchedule{-0.5, 1.0, 15, 20}), Error);
  EXPECT_NO_THROW(validate(ClipCeSchedule{0.5, 1.0, 20, 20}));
  const ClipCeSchedule d;
  EXPECT_EQ(d.pretrain_epochs, 15);
  EXPECT_EQ(d.total_epochs, 20);
}

TEST(LossKind, Parse) {
  EXPECT_EQ(parse_loss_kind("ce"), LossKind::kCe);
  EXPECT_EQ(parse_loss_kind("focal"), LossKind::kFocal);
  EXPECT_EQ(parse_loss_kind("clipce"), LossKind::kClipCe);
  EXPECT_THROW(parse_loss_kind("dice"), Error);
}

TEST(BatchLoss, Examples) {
  const ClipCeSchedule zero{0.0, 0.0, 15, 20};
  const std::vector<ProposalTerm> one{{binary(0.3), weights(0.7)}};
  EXPECT_EQ(batch_detection_class_loss(one, 1, zero).loss, ce_loss(binary(0.3)));

  const ClipCeSchedule s{1.0, 1.0, 15, 20};
  const std::vector<ProposalTerm> bg{{ClassificationOutput{{0.8, 0.2}, 0}, {}},
                                     {ClassificationOutput{{0.4, 0.6}, 0}, {}}};
  const BatchLoss b = batch_detection_class_loss(bg, 1, s);
  EXPECT_NEAR(b.loss, (oracle::ce(0.8) + oracle::ce(0.4)) / 2, 1e-12);
  EXPECT_EQ(b.background, 2u);
  EXPECT_EQ(b.positives, 0u);

  const std::vector<ProposalTerm> two{{binary(0.5), weights(0.2)}, {binary(0.5), weights(0.9)}};
  const BatchLoss t = batch_detection_class_loss(two, 1, s);
  const double c_low = clipce_loss(binary(0.5), weights(0.2), 1, s);
  const double c_high = clipce_loss(binary(0.5), weights(0.9), 1, s);
  EXPECT_GT(c_high, c_low);
  EXPECT_NEAR(t.loss, (c_low + c_high) / 2, 1e-12);
  EXPECT_EQ(t.ame_terms, 2u);
  EXPECT_EQ(t.fame_terms, 0u);
  EXPECT_NEAR(t.mean_active_weight, 0.55, 1e-12);

  EXPECT_THROW(batch_detection_class_loss({}, 1, s), Error);
}

TEST(BatchLoss, FameCounters) {
  const ClipCeSchedule s{1.0, 1.0, 1, 2};
  const std::vector<ProposalTerm> batch{{binary(0.5), weights(0.2, 0.4)}, {ClassificationOutput{{0.9, 0.1}, 0}, {}}};
  const BatchLoss b = batch_detection_class_loss(batch, 2, s);
  EXPECT_EQ(b.fame_terms, 1u);
  EXPECT_EQ(b.ame_terms, 0u);
  EXPECT_NEAR(b.loss, (oracle::clipce(0.5, 0.2, 0.4, 2, 1, 1, 1) + oracle::ce(0.9)) / 2, 1e-12);
}

std::vector<double> numeric_gradient(const std::vector<double>& logits, const std::function<double(const std::vector<double>&)>& f) {
  const double h = 1e-4;
  std::vector<double> g(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    std::vector<double> up = logits, down = logits;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& n) {
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err = std::max(err, std::abs(a[i] - n[i]));
    scale = std::max(scale, std::abs(n[i]));
  }
  return err / scale;
}

TEST(Gradients, WeightedCeMatchesFiniteDifferences) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> logits(4);
    for (double& z : logits) z = rng.uniform(-3, 3);
    const std::size_t gt = rng.below(4);
    const double m = std::exp(rng.uniform(0, 2));
    const auto f = [&](const std::vector<double>& z) {
      return m * oracle::ce(softmax(z)[gt]);
    };
    const auto analytic = weighted_ce_logit_gradient(softmax(logits), gt, m);
    EXPECT_LE(rel_err(analytic, numeric_gradient(logits, f)), 1e-4);
  }
}

TEST(Gradients, ClipCeMatchesFiniteDifferences) {
  SplitMix64 rng(5);
  const ClipCeSchedule s{0.5, 1.0, 2, 4};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> logits(3);
    for (double& z : logits) z = rng.uniform(-3, 3);
    const std::size_t gt = rng.below(3);
    const auto w = weights(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
    const int epoch = 1 + static_cast<int>(rng.below(4));
    const auto f = [&](const std::vector<double>& z) {
      return clipce_loss(ClassificationOutput{softmax(z), gt}, w, epoch, s);
    };
    const auto analytic = weighted_ce_logit_gradient(softmax(logits), gt, clipce_multiplier(w, epoch, s));
    EXPECT_LE(rel_err(analytic, numeric_gradient(logits, f)), 1e-4);
  }
}

TEST(Gradients, FocalMatchesFiniteDifferences) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> logits(3);
    for (double& z : logits) z = rng.uniform(-3, 3);
    const std::size_t gt = rng.below(3);
    const double g = rng.uniform(0, 3);
    const auto f = [&](const std::vector<double>& z) { return oracle::focal(softmax(z)[gt], g); };
    const auto analytic = focal_logit_gradient(softmax(logits), gt, {g});
    EXPECT_LE(rel_err(analytic, numeric_gradient(logits, f)), 1e-4);
  }
}

TEST(Softmax, StableAndNormalized) {
  const auto p = softmax(std::vector<double>{1000.0, 1000.0, 0.0});
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
  EXPECT_THROW(softmax(std::vector<double>{}), Error);
}

}  // namespace
}  // namespace clipce::loss
