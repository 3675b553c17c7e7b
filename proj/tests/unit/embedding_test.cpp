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
#include <string>

#include "ame/ame.hpp"
#include "common/error.hpp"
#include "common/log.hpp"
#include "embedding/embedding.hpp"

namespace clipce::embedding {
namespace {

double norm(const Embedding& e) {
  double s = 0;
  for (double x : e.values()) s += x * x;
  return std::sqrt(s);
}

Image solid(int w, int h, double v) {
  Image img;
  img.width = w;
  img.height = h;
  img.channels = 3;
  img.data.assign(static_cast<std::size_t>(w) * h * 3, v);
  return img;
}

TEST(PromptPair, DefaultTemplates) {
  const PromptPair p = build_prompt_pair("car", kDefaultPositiveTemplate, kDefaultNegativeTemplate);
  EXPECT_EQ(p.positive_text, "a photo of a car");
  EXPECT_EQ(p.negative_text, "a photo without car");
  const PromptPair f = build_prompt_pair("person", "a foggy photo of a {cls}", "a foggy photo without {cls}");
  EXPECT_EQ(f.positive_text, "a foggy photo of a person");
  EXPECT_EQ(f.negative_text, "a foggy photo without person");
}

TEST(PromptPair, BareSubstitution) {
  const PromptPair p = build_prompt_pair("x", "{cls}", "{cls}!");
  EXPECT_EQ(p.positive_text, "x");
  EXPECT_EQ(p.negative_text, "x!");
}

TEST(PromptPair, Errors) {
  try {
    build_prompt_pair("car", "a photo", "a photo without {cls}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTemplate);
  }
  try {
    build_prompt_pair("car", "{cls} {cls}", "without {cls}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTemplate);
  }
  try {
    build_prompt_pair("", "{cls}", "no {cls}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInput);
  }
  EXPECT_THROW(build_prompt_pair("car", "{cls}", "{cls}"), Error);
}

TEST(PromptPair, ClassNameRoundTrip) {
  for (const std::string name : {"bicycle", "traffic light", "a", "motor bike"}) {
    const PromptPair p = build_prompt_pair(name, kDefaultPositiveTemplate, kDefaultNegativeTemplate);
    EXPECT_EQ(p.positive_text.substr(std::string("a photo of a ").size()), name);
  }
}

TEST(StubProvider, TextIsDeterministicAndUnitNorm) {
  StubProvider a(7, 64);
  StubProvider b(7, 64);
  const Embedding e1 = a.encode_text("a photo of a car");
  const Embedding e2 = b.encode_text("a photo of a car");
  ASSERT_EQ(e1.dim(), 64u);
  for (std::size_t i = 0; i < e1.dim(); ++i) EXPECT_EQ(e1[i], e2[i]);
  EXPECT_NEAR(norm(e1), 1.0, 1e-5);
  const Embedding other = a.encode_text("a photo without car");
  EXPECT_LT(std::abs(ame::similarity(e1, other)), 0.9);
  EXPECT_TRUE(a.descriptor().deterministic);
  EXPECT_EQ(a.descriptor().backend_id, "stub:7");
}

TEST(StubProvider, SeedChangesVectors) {
  const Embedding a = StubProvider(1, 32).encode_text("hello");
  const Embedding b = StubProvider(2, 32).encode_text("hello");
  EXPECT_LT(ame::similarity(a, b), 0.99);
}

TEST(StubProvider, LongTextTruncatedWithWarning) {
  StubProvider p(0, 16);
  take_warnings();
  std::string text;
  for (int i = 0; i < 100; ++i) text += "word ";
  const Embedding e = p.encode_text(text);
  EXPECT_NEAR(norm(e), 1.0, 1e-5);
  const auto warnings = take_warnings();
  ASSERT_FALSE(warnings.empty());
  EXPECT_NE(warnings.front().find("truncat"), std::string::npos);
}

TEST(StubProvider, CropWeightTracksDegradation) {
  StubProvider p(3, 64);
  const PromptPair pair = build_prompt_pair("car", kDefaultPositiveTemplate, kDefaultNegativeTemplate);
  const Embedding tp = p.encode_text(pair.positive_text);
  const Embedding tn = p.encode_text(pair.negative_text);
  const Image img = solid(32, 32, 0.5);
  double prev_cos = -2.0;
  for (double g : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const Embedding v = p.encode_image_crop(img, Box{4, 4, 10, 10}, CropHints{g, pair});
    EXPECT_NEAR(norm(v), 1.0, 1e-5);
    const double c = ame::similarity(v, tn);
    EXPECT_GT(c, prev_cos);
    prev_cos = c;
  }
}

TEST(StubProvider, CropDeterministicAndTinyCrop) {
  StubProvider p(3, 16);
  Image img = solid(8, 8, 0.25);
  img.at(3, 3, 0) = 0.9;
  const Embedding a = p.encode_image_crop(img, Box{0, 0, 8, 8});
  const Embedding b = p.encode_image_crop(img, Box{0, 0, 8, 8});
  for (std::size_t i = 0; i < a.dim(); ++i) EXPECT_EQ(a[i], b[i]);
  const Embedding tiny = p.encode_image_crop(img, Box{3, 3, 1, 1});
  EXPECT_NEAR(norm(tiny), 1.0, 1e-5);
}

TEST(StubProvider, EmptyCropRejected) {
  StubProvider p(3, 16);
  const Image img = solid(8, 8, 0.25);
  try {
    p.encode_image_crop(img, Box{20, 20, 4, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInput);
  }
  EXPECT_THROW(p.encode_image_crop(img, Box{2, 2, 0, 3}), Error);
}

TEST(CropPolicy, SquarePadAndClip) {
  const CropPolicy policy{true, 16};
  const PixelRect r = crop_rect(Box{10, 10, 20, 10}, 100, 100, policy);
  EXPECT_EQ(r.x1 - r.x0, r.y1 - r.y0);
  EXPECT_EQ(r.x0, 10);
  EXPECT_EQ(r.y0, 5);
  // Full-image box: padding is a no-op.
  const PixelRect full = crop_rect(Box{0, 0, 40, 40}, 40, 40, policy);
  EXPECT_EQ(full.x0, 0);
  EXPECT_EQ(full.y0, 0);
  EXPECT_EQ(full.x1, 40);
  EXPECT_EQ(full.y1, 40);
  // Partially outside: clipped but non-empty.
  const PixelRect edge = crop_rect(Box{-5, -5, 10, 10}, 40, 40, policy);
  EXPECT_EQ(edge.x0, 0);
  EXPECT_EQ(edge.y0, 0);
  EXPECT_GT(edge.x1, 0);
  const Image crop = prepare_crop(solid(40, 40, 0.3), Box{-5, -5, 10, 10}, policy);
  EXPECT_EQ(crop.width, 16);
  EXPECT_EQ(crop.height, 16);
}

TEST(Provider, RealBackendUnavailable) {
  try {
    make_provider("real");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProvider);
  }
  EXPECT_THROW(make_provider("stub:abc"), Error);
  EXPECT_EQ(make_provider("stub:9", 24)->dim(), 24u);
}

TEST(Provider, BatchEncodingPreservesOrder) {
  StubProvider p(5, 16);
  const std::vector<std::string> texts{"a", "b", "c"};
  const auto batch = p.encode_texts(texts);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const Embedding single = p.encode_text(texts[i]);
    for (std::size_t k = 0; k < single.dim(); ++k) EXPECT_EQ(batch[i][k], single[k]);
  }
}

TEST(Embedding, RejectsZeroAndNonFinite) {
  EXPECT_THROW(Embedding::normalized({0.0, 0.0}), Error);
  EXPECT_THROW(Embedding::normalized({1.0, NAN}), Error);
  const Embedding e = Embedding::normalized({3.0, 4.0});
  EXPECT_DOUBLE_EQ(e[0], 0.6);
  EXPECT_DOUBLE_EQ(e[1], 0.8);
}

}  // namespace
}  // namespace clipce::embedding
