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

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ame/weight_cache.hpp"
#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"
#include "detect/detector.hpp"
#include "detect/trainer.hpp"
#include "eval/eval.hpp"
#include "image/image.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace clipce::eval {
namespace {

std::vector<ScoredBox> five_detections() {
  return {{1, {0, 0, 10, 10}, 0.9},
          {1, {60, 60, 10, 10}, 0.8},
          {1, {20, 0, 10, 10}, 0.7},
          {1, {1, 0, 10, 10}, 0.6},
          {1, {40, 0, 10, 10}, 0.5}};
}

std::vector<GroundTruthBox> three_gts() { return {{1, {0, 0, 10, 10}}, {1, {20, 0, 10, 10}}, {1, {40, 0, 10, 10}}}; }

TEST(AveragePrecision, FiveDetectionFixture) {
  const ApResult r = average_precision(five_detections(), three_gts());
  const double expected = oracle::ap_from_hits({true, false, true, false, true}, 3);
  EXPECT_NEAR(expected, (1.0 + 2.0 / 3.0 + 0.6) / 3.0, 1e-12);
  EXPECT_NEAR(r.ap, expected, 1e-9);
  EXPECT_NEAR(r.ap, 0.755556, 1e-6);
  EXPECT_EQ(r.matched, 3u);
}

TEST(AveragePrecision, Trivial) {
  const std::vector<GroundTruthBox> one{{1, {0, 0, 5, 5}}};
  const std::vector<ScoredBox> hit{{1, {0, 0, 5, 5}, 0.3}};
  EXPECT_EQ(average_precision(hit, one).ap, 1.0);
  EXPECT_EQ(average_precision({}, one).ap, 0.0);
  // Same box on another image does not match.
  const std::vector<ScoredBox> elsewhere{{2, {0, 0, 5, 5}, 0.3}};
  EXPECT_EQ(average_precision(elsewhere, one).ap, 0.0);
}

TEST(AveragePrecision, ThresholdIsInclusive) {
  const std::vector<GroundTruthBox> gt{{1, {0, 0, 10, 10}}};
  // IoU exactly 0.5: 10x10 vs 10x5 inside it.
  const std::vector<ScoredBox> half{{1, {0, 0, 10, 5}, 0.9}};
  EXPECT_EQ(average_precision(half, gt).ap, 1.0);
}

TEST(AveragePrecision, RandomPropertiesAgainstOracle) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruthBox> gts;
    const int n_gt = 1 + static_cast<int>(rng.below(5));
    for (int g = 0; g < n_gt; ++g) gts.push_back({1, {30.0 * g, 0, 10, 10}});
    std::vector<ScoredBox> dets;
    std::vector<bool> used(n_gt, false);
    std::vector<bool> hits;
    const int n_det = static_cast<int>(rng.below(8));
    for (int d = 0; d < n_det; ++d) {
      const double score = 1.0 - 0.1 * d;
      if (rng.uniform() < 0.6) {
        const int g = static_cast<int>(rng.below(n_gt));
        dets.push_back({1, {30.0 * g + 1, 0, 10, 10}, score});
        hits.push_back(!used[g]);
        used[g] = true;
      } else {
        dets.push_back({1, {500, 500, 5, 5}, score});
        hits.push_back(false);
      }
    }
    const ApResult r = average_precision(dets, gts);
    EXPECT_NEAR(r.ap, oracle::ap_from_hits(hits, gts.size()), 1e-12);
    EXPECT_GE(r.ap, 0.0);
    EXPECT_LE(r.ap, 1.0);
    EXPECT_LE(r.matched, std::min(gts.size(), dets.size()));
    // A trailing duplicate false positive never helps.
    auto more = dets;
    more.push_back({1, {500, 500, 5, 5}, 0.0});
    EXPECT_LE(average_precision(more, gts).ap, r.ap + 1e-15);
  }
}

data::DatasetManifest two_image_manifest() {
  data::DatasetManifest m;
  m.class_names = {"a", "b", "c"};
  for (std::int64_t id : {1, 2}) {
    data::ManifestEntry e;
    e.image_id = id;
    e.image_path = "x.png";
    e.width = 64;
    e.height = 64;
    e.annotations.push_back({id * 10, 0, {4, 4, 10, 10}, {}});
    e.annotations.push_back({id * 10 + 1, 1, {30, 30, 12, 8}, {}});
    m.entries.push_back(e);
  }
  return m;
}

std::map<std::int64_t, std::vector<detect::Detection>> replay(const data::DatasetManifest& m) {
  std::map<std::int64_t, std::vector<detect::Detection>> out;
  for (const auto& e : m.entries)
    for (const auto& a : e.annotations) out[e.image_id].push_back({a.bbox, a.class_index, 1.0});
  return out;
}

TEST(Evaluate, PerfectReplayAndSilence) {
  const auto m = two_image_manifest();
  const EvalReport perfect = evaluate_detections(m, replay(m));
  EXPECT_EQ(perfect.map50, 1.0);
  EXPECT_EQ(perfect.per_class_ap.size(), 2u);
  EXPECT_EQ(perfect.excluded_classes, (std::vector<std::string>{"c"}));
  EXPECT_EQ(perfect.counts.gt, 4u);
  EXPECT_EQ(perfect.counts.matched, 4u);
  const EvalReport none = evaluate_detections(m, {});
  EXPECT_EQ(none.map50, 0.0);
  EXPECT_EQ(none.counts.detections, 0u);
}

TEST(Evaluate, MapIsMeanOfPresentClasses) {
  const auto m = two_image_manifest();
  auto dets = replay(m);
  dets[1].push_back({{50, 0, 5, 5}, 0, 1.0});
  const EvalReport r = evaluate_detections(m, dets);
  double sum = 0;
  for (const auto& [name, ap] : r.per_class_ap) sum += ap;
  EXPECT_EQ(r.map50, sum / static_cast<double>(r.per_class_ap.size()));
  EXPECT_LT(r.per_class_ap.at("a"), 1.0);
  EXPECT_EQ(r.per_class_ap.at("b"), 1.0);
}

TEST(Evaluate, ImageOrderInvariant) {
  auto m = two_image_manifest();
  SplitMix64 rng(2);
  std::map<std::int64_t, std::vector<detect::Detection>> dets;
  for (const auto& e : m.entries)
    for (int k = 0; k < 5; ++k)
      dets[e.image_id].push_back({{rng.uniform(0, 40), rng.uniform(0, 40), 10, 10}, static_cast<int>(rng.below(2)),
                                  rng.uniform()});
  const Json a = to_json(evaluate_detections(m, dets));
  std::reverse(m.entries.begin(), m.entries.end());
  const Json b = to_json(evaluate_detections(m, dets));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.at("schema"), "eval_report/v1");
}

TEST(Evaluate, EmptyInputsRejected) {
  data::DatasetManifest empty;
  empty.class_names = {"a"};
  try {
    evaluate_detections(empty, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInput);
  }
  auto unannotated = two_image_manifest();
  for (auto& e : unannotated.entries) e.annotations.clear();
  EXPECT_THROW(evaluate_detections(unannotated, {}), Error);
}

// Replays ground truth for whichever image it is shown, keyed by pixel hash.
class ReplayDetector final : public detect::Detector {
 public:
  explicit ReplayDetector(const data::DatasetManifest& m) {
    for (const auto& e : m.entries) {
      const Image img = read_png(m.image_file(e));
      auto& out = by_hash_[key(img)];
      for (const auto& a : e.annotations) out.push_back({a.bbox, a.class_index, 1.0});
    }
  }
  detect::DetectorDescriptor descriptor() const override { return {"replay", 1, 1}; }
  std::vector<detect::Detection> predict(const Image& image, double, double) const override {
    const auto it = by_hash_.find(key(image));
    return it == by_hash_.end() ? std::vector<detect::Detection>{} : it->second;
  }

 private:
  static std::string key(const Image& img) {
    const auto bytes = to_bytes(img);
    return sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  std::map<std::string, std::vector<detect::Detection>> by_hash_;
};

TEST(Evaluate, DetectorReplayScoresOne) {
  testing_support::TempDir dir("eval");
  const auto m = testing_support::single_image_manifest(dir.path(), {{Box{2, 2, 12, 12}, 0, {}}, {Box{20, 20, 9, 9}, 0, {}}});
  const EvalReport r = evaluate(ReplayDetector(m), m);
  EXPECT_EQ(r.map50, 1.0);
}

TEST(Spearman, Basics) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 6, 8, 100};
  const std::vector<double> down{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(*spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(*spearman(x, down), -1.0);
  const std::vector<double> flat{1, 1, 1, 1, 1};
  EXPECT_FALSE(spearman(x, flat).has_value());
  EXPECT_FALSE(spearman(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
  // Ties take average ranks: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4).
  const std::vector<double> tied{1, 2, 2, 3};
  const std::vector<double> lin{1, 2, 3, 4};
  const double rx[] = {1, 2.5, 2.5, 4}, ry[] = {1, 2, 3, 4};
  double mx = 2.5, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - mx);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - mx) * (ry[i] - mx);
  }
  EXPECT_NEAR(*spearman(tied, lin), sxy / std::sqrt(sxx * syy), 1e-12);
}

ame::WeightCache small_cache() {
  ame::WeightCache c;
  c.header.backend_id = "stub:0";
  c.header.dim = 4;
  c.append({1, 1, "car", 0.3, 0.1, 0.45});
  c.append({1, 2, "car", 0.1, 0.4, 0.57});
  c.append({2, 3, "car", 0.0, 0.5, 0.62});
  return c;
}

std::vector<detect::EpochLog> small_log() {
  detect::EpochLog e1, e2;
  e1.epoch = 1;
  e2.epoch = 2;
  e1.objects = {{1, 1, 0.1, true, 0.2, 0.45, {}, {}}, {1, 2, 0.5, true, 0.3, 0.57, {}, {}}};
  e2.objects = {{1, 1, 0.1, true, 0.9, 0.45, {}, {}}, {1, 2, 0.5, false, 0.7, 0.57, {}, {}},
                {9, 9, 0.9, true, 0.1, 0.5, {}, {}}};
  return {e1, e2};
}

TEST(WeightAnalysis, JoinsAndCountsSkips) {
  const WeightReport r = weight_analysis(small_cache(), small_log());
  EXPECT_EQ(r.epoch, 2);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.skipped, 2u);  // cache record (2, 3) and log object (9, 9)
  EXPECT_EQ(r.rows[0].p_t, 0.9);
  EXPECT_EQ(r.rows[0].w_ame, 0.45);
  EXPECT_EQ(r.rows[0].class_name, "car");
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.focal_w, std::pow(1.0 - row.p_t, 2), 1e-12);
    EXPECT_NEAR(row.focal_w, oracle::focal_weight(row.p_t, 2.0), 1e-12);
  }
  const WeightReport first = weight_analysis(small_cache(), small_log(), nullptr, 1);
  EXPECT_EQ(first.rows[0].p_t, 0.2);
  EXPECT_THROW(weight_analysis(small_cache(), small_log(), nullptr, 5), Error);
}

TEST(WeightAnalysis, CsvFormat) {
  const WeightReport r = weight_analysis(small_cache(), small_log());
  const std::string csv = to_csv(r);
  const std::string header = "image_id,annotation_id,class,degradation,w_ame,focal_w,p_t\n";
  ASSERT_EQ(csv.substr(0, header.size()), header);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(summary_json(r).at("schema"), "weight_report/v1");
}

TEST(WeightAnalysis, EmptyCacheGivesHeaderOnly) {
  const WeightReport r = weight_analysis(ame::WeightCache{}, {});
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(to_csv(r), "image_id,annotation_id,class,degradation,w_ame,focal_w,p_t\n");
  EXPECT_FALSE(r.spearman_w_ame.has_value());
}

TEST(WeightAnalysis, EqualDegradationGivesFlatWeights) {
  testing_support::TempDir dir("wa");
  const auto m = testing_support::single_image_manifest(
      dir.path(), {{Box{2, 2, 12, 12}, 0, 0.4}, {Box{20, 4, 10, 14}, 0, 0.4}, {Box{6, 24, 16, 16}, 0, 0.4}});
  embedding::StubProvider p(2, 64);
  const auto cache = ame::precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}");
  double mean = 0, var = 0;
  for (const auto& rec : cache.records()) mean += rec.w_ame / 3;
  for (const auto& rec : cache.records()) var += (rec.w_ame - mean) * (rec.w_ame - mean) / 3;
  EXPECT_LT(var, 1e-3);
  // Without a training log there is no p_t to join against.
  EXPECT_EQ(weight_analysis(cache, {}, &m).skipped, 3u);
  detect::EpochLog e;
  e.epoch = 1;
  for (const auto& rec : cache.records()) e.objects.push_back({rec.image_id, rec.annotation_id, {}, true, 0.5, rec.w_ame, {}, {}});
  const std::vector<detect::EpochLog> log{e};
  const WeightReport r = weight_analysis(cache, log, &m);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].degradation, 0.4);
  EXPECT_FALSE(r.spearman_w_ame.has_value());
}

}  // namespace
}  // namespace clipce::eval
