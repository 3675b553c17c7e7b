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
#include <limits>
#include <vector>

#include "ame/ame.hpp"
#include "ame/weight_cache.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "embedding/embedding.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace clipce::ame {
namespace {

TEST(Similarity, Trivial) {
  const std::vector<double> v{0.6, 0.8};
  const std::vector<double> o{-0.8, 0.6};
  const std::vector<double> n{-0.6, -0.8};
  EXPECT_NEAR(similarity(v, v), 1.0, 1e-12);
  EXPECT_NEAR(similarity(v, o), 0.0, 1e-12);
  EXPECT_NEAR(similarity(v, n), -1.0, 1e-12);
  EXPECT_EQ(similarity(v, o), similarity(o, v));
  const std::vector<double> short_vec{1.0};
  try {
    similarity(v, short_vec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInput);
  }
}

TEST(Similarity, BoundedForUnitVectors) {
  SplitMix64 rng(11);
  embedding::StubProvider p(1, 32);
  for (int i = 0; i < 50; ++i) {
    const auto a = p.encode_text("t" + std::to_string(rng()));
    const auto b = p.encode_text("u" + std::to_string(rng()));
    EXPECT_LE(std::abs(similarity(a, b)), 1.0 + 1e-6);
  }
}

TEST(AmeWeight, Examples) {
  EXPECT_DOUBLE_EQ(ame_weight({0.3, 0.3}), 0.5);
  EXPECT_DOUBLE_EQ(ame_weight({-7.0, -7.0}), 0.5);
  EXPECT_NEAR(ame_weight({0.0, 2.0}), oracle::ame(0.0, 2.0), 1e-12);
  EXPECT_NEAR(ame_weight({0.0, 2.0}), 0.880797, 1e-6);
}

TEST(AmeWeight, Properties) {
  SplitMix64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const double sp = rng.uniform(-1, 1);
    const double sn = rng.uniform(-1, 1);
    const double w = ame_weight({sp, sn});
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 1.0);
    EXPECT_NEAR(w + ame_weight({sn, sp}), 1.0, 1e-12);
    EXPECT_NEAR(w, oracle::sigmoid(sn - sp), 1e-9);
    EXPECT_NEAR(w, oracle::ame(sp, sn), 1e-12);
    const double c = rng.uniform(-50, 50);
    EXPECT_NEAR(ame_weight({sp + c, sn + c}), w, 1e-9);
    EXPECT_GT(ame_weight({sp, sn + 0.01}), w);
    EXPECT_LT(ame_weight({sp + 0.01, sn}), w);
  }
}

TEST(AmeWeight, StableForLargeInputs) {
  const double w = ame_weight({1000.0, 1001.0});
  EXPECT_NEAR(w, oracle::sigmoid(1.0), 1e-12);
  EXPECT_TRUE(std::isfinite(ame_weight({-1e6, 1e6})));
  EXPECT_THROW(ame_weight({NAN, 0.0}), Error);
  EXPECT_THROW(ame_weight({0.0, std::numeric_limits<double>::infinity()}), Error);
}

TEST(FocalWeight, Examples) {
  for (double g : {0.0, 0.5, 2.0, 5.0}) {
    EXPECT_EQ(focal_weight(0.0, {g}), 1.0);
    if (g > 0) {
      EXPECT_EQ(focal_weight(1.0, {g}), 0.0);
    }
  }
  EXPECT_NEAR(focal_weight(0.9, {2.0}), 0.01, 1e-12);
  EXPECT_THROW(focal_weight(1.1, {2.0}), Error);
  EXPECT_THROW(focal_weight(-0.1, {2.0}), Error);
  EXPECT_THROW(focal_weight(0.5, {-1.0}), Error);
}

TEST(FocalWeight, MatchesSquareOnGrid) {
  double prev = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double p = i / 99.0;
    const double w = focal_weight(p, {2.0});
    EXPECT_EQ(w, (1.0 - p) * (1.0 - p));
    EXPECT_NEAR(w, oracle::focal_weight(p, 2.0), 1e-15);
    EXPECT_LE(w, prev);
    prev = w;
  }
}

TEST(Precompute, EmptyDataset) {
  data::DatasetManifest m;
  m.class_names = {"car"};
  embedding::StubProvider p(0, 16);
  const WeightCache c = precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}");
  EXPECT_EQ(c.size(), 0u);
  EXPECT_FALSE(c.header.partial);
}

TEST(Precompute, MonotoneInDegradationAndMatchesOracle) {
  testing_support::TempDir dir("ame");
  const auto m = testing_support::single_image_manifest(
      dir.path(), {{Box{2, 2, 12, 12}, 0, 0.1}, {Box{18, 4, 10, 14}, 0, 0.5}, {Box{6, 24, 16, 16}, 0, 0.9}});
  embedding::StubProvider p(4, 64);
  PrecomputeReport report;
  const WeightCache c = precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}", &report);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(report.processed, 3u);
  EXPECT_LT(c.records()[0].w_ame, c.records()[1].w_ame);
  EXPECT_LT(c.records()[1].w_ame, c.records()[2].w_ame);

  // Oracle: recompute each record from the provider's own embeddings.
  const auto tp = p.encode_text("a photo of a car");
  const auto tn = p.encode_text("a photo without car");
  const Image img = read_png(dir / "img.png");
  const auto pair = embedding::build_prompt_pair("car", "a photo of a {cls}", "a photo without {cls}");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = m.entries[0].annotations[i];
    const auto v = p.encode_image_crop(img, a.bbox, embedding::CropHints{a.degradation, pair});
    const std::vector<double> vv(v.values().begin(), v.values().end());
    const std::vector<double> tpv(tp.values().begin(), tp.values().end());
    const std::vector<double> tnv(tn.values().begin(), tn.values().end());
    const double sp = static_cast<double>(oracle::dot(vv, tpv));
    const double sn = static_cast<double>(oracle::dot(vv, tnv));
    EXPECT_NEAR(c.records()[i].sim_pos, sp, 1e-12);
    EXPECT_NEAR(c.records()[i].sim_neg, sn, 1e-12);
    EXPECT_NEAR(c.records()[i].w_ame, oracle::ame(sp, sn), 1e-12);
  }
}

TEST(Precompute, DegradedObjectsRankHigher) {
  // Near, mid and far objects: the far one is the most degraded.
  testing_support::TempDir dir("ame");
  const auto m = testing_support::single_image_manifest(
      dir.path(), {{Box{2, 2, 12, 12}, 0, 0.05}, {Box{18, 4, 10, 14}, 0, 0.45}, {Box{6, 24, 16, 16}, 0, 0.95}});
  embedding::StubProvider p(9, 64);
  const WeightCache c = precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_LT(c.records()[0].w_ame, c.records()[1].w_ame);
  EXPECT_LT(c.records()[1].w_ame, c.records()[2].w_ame);
}

TEST(Precompute, DeterministicBytes) {
  testing_support::TempDir dir("ame");
  const auto m = testing_support::single_image_manifest(dir.path(), {{Box{2, 2, 12, 12}, 0, {}}, {Box{20, 20, 8, 8}, 0, {}}});
  embedding::StubProvider p(4, 32);
  const std::string a = serialize(precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}"));
  const std::string b = serialize(precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}"));
  EXPECT_EQ(a, b);
}

TEST(Precompute, MissingImageIsCollected) {
  testing_support::TempDir dir("ame");
  auto m = testing_support::single_image_manifest(dir.path(), {{Box{2, 2, 12, 12}, 0, {}}});
  data::ManifestEntry ghost = m.entries[0];
  ghost.image_id = 2;
  ghost.image_path = "missing.png";
  ghost.annotations[0].annotation_id = 9;
  m.entries.push_back(ghost);
  embedding::StubProvider p(4, 32);
  PrecomputeReport report;
  const WeightCache c = precompute_ame_weights(m, p, "a photo of a {cls}", "a photo without {cls}", &report);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(report.item_errors.size(), 1u);
  EXPECT_FALSE(report.aborted);
}

TEST(WeightCache, RoundTripAndCompatibility) {
  testing_support::TempDir dir("cache");
  WeightCache c;
  c.header.backend_id = "stub:1";
  c.header.dim = 8;
  c.header.template_pos = "a photo of a {cls}";
  c.header.template_neg = "a photo without {cls}";
  c.header.templates_hash = templates_hash(c.header.template_pos, c.header.template_neg);
  c.header.manifest_hash = "abc";
  c.append(CacheRecord{1, 2, "car", 0.1, 0.3, ame_weight({0.1, 0.3})});
  c.append(CacheRecord{1, 3, "car", 0.4, -0.2, ame_weight({0.4, -0.2})});
  write_weight_cache(dir / "w.jsonl", c);
  const WeightCache back = read_weight_cache(dir / "w.jsonl");
  EXPECT_EQ(serialize(back), serialize(c));
  ASSERT_NE(back.find(1, 3), nullptr);
  EXPECT_EQ(back.find(1, 3)->w_ame, c.records()[1].w_ame);
  EXPECT_EQ(back.find(2, 3), nullptr);

  EXPECT_TRUE(compatible(back.header, c.header));
  WeightCacheHeader other = c.header;
  other.template_pos = "a hazy photo of a {cls}";
  other.templates_hash = templates_hash(other.template_pos, other.template_neg);
  EXPECT_FALSE(compatible(back.header, other));
  other = c.header;
  other.backend_id = "stub:2";
  EXPECT_FALSE(compatible(back.header, other));
  other = c.header;
  other.dim = 16;
  EXPECT_FALSE(compatible(back.header, other));
  WeightCacheHeader partial = c.header;
  partial.partial = true;
  EXPECT_FALSE(compatible(partial, c.header));
}

TEST(WeightCache, RejectsGarbage) {
  EXPECT_THROW(parse_weight_cache("not json\n"), Error);
  EXPECT_THROW(parse_weight_cache(""), Error);
}

}  // namespace
}  // namespace clipce::ame
