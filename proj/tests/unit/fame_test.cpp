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
#include <vector>

#include "ame/ame.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "fame/adapter.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace clipce::fame {
namespace {

constexpr std::size_t kD = 8;
constexpr std::size_t kR = 6;

std::vector<double> unit(SplitMix64& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0;
  for (double& x : v) {
    x = rng.normal();
    s += x * x;
  }
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

std::vector<double> nonneg(SplitMix64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(0.0, 1.0);
  return v;
}

AdapterConfig small_config(double lr = 0.01) { return AdapterConfig{kD + kR, 16, kD, lr}; }

std::vector<double> flat_grad(const AdapterGradient& g) {
  std::vector<double> out;
  for (const auto* part : {&g.w1, &g.b1, &g.w2, &g.b2}) out.insert(out.end(), part->begin(), part->end());
  return out;
}

TEST(Adapt, ZeroAdapterGivesZero) {
  Adapter a(small_config());
  SplitMix64 rng(1);
  const auto out = a.adapt(unit(rng, kD), nonneg(rng, kR));
  ASSERT_EQ(out.size(), kD);
  for (double x : out) EXPECT_EQ(x, 0.0);
}

TEST(Adapt, PassthroughFixture) {
  AdapterConfig c{kD + kR, kD, kD, 0.01};
  Adapter a(c);
  for (std::size_t i = 0; i < kD; ++i) {
    a.w1()[i * c.input_dim + i] = 1.0;
    a.w2()[i * c.hidden_dim + i] = 1.0;
  }
  SplitMix64 rng(2);
  const auto v = nonneg(rng, kD);
  const auto out = a.adapt(v, nonneg(rng, kR));
  for (std::size_t i = 0; i < kD; ++i) EXPECT_DOUBLE_EQ(out[i], v[i]);
}

TEST(Adapt, DeterministicNonnegativeAndChecksDims) {
  const Adapter a = Adapter::random(small_config(), 42);
  const Adapter b = Adapter::random(small_config(), 42);
  SplitMix64 rng(3);
  const auto v = unit(rng, kD);
  const auto r = nonneg(rng, kR);
  const auto o1 = a.adapt(v, r);
  EXPECT_EQ(o1, b.adapt(v, r));
  EXPECT_EQ(o1, a.adapt(v, r));
  for (double x : o1) EXPECT_GE(x, 0.0);
  const std::vector<double> short_roi(kR - 1, 0.0);
  try {
    a.adapt(v, short_roi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(OffsetWeight, Examples) {
  const std::vector<double> tp{1, 0, 0};
  const std::vector<double> tn{0, 1, 0};
  EXPECT_DOUBLE_EQ(offset_weight({{0.0, 0.0, 1.0}}, tp, tn), 0.5);
  EXPECT_DOUBLE_EQ(offset_weight({{0.0, 0.0, 0.0}}, tp, tn), 0.5);
  EXPECT_NEAR(offset_weight(tn, tp, tn), 0.731059, 1e-6);
  EXPECT_NEAR(offset_weight(tn, tp, tn), oracle::offset(tn, tp, tn), 1e-12);
  EXPECT_THROW(offset_weight({{NAN, 0.0, 0.0}}, tp, tn), Error);
}

TEST(OffsetWeight, SwapComplement) {
  SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = nonneg(rng, kD);
    const auto tp = unit(rng, kD);
    const auto tn = unit(rng, kD);
    const double w = offset_weight(a, tp, tn);
    EXPECT_NEAR(w + offset_weight(a, tn, tp), 1.0, 1e-12);
    EXPECT_NEAR(w, oracle::offset(a, tp, tn), 1e-12);
  }
}

TEST(SoftLabel, Branches) {
  EXPECT_EQ(soft_label(0.7, {0.5}), 0);
  EXPECT_EQ(soft_label(0.3, {0.5}), 1);
  EXPECT_EQ(soft_label(0.5, {0.5}), 1);
  int prev = 1;
  for (int i = 0; i <= 100; ++i) {
    const int u = soft_label(i / 100.0, {0.5});
    EXPECT_EQ(u, oracle::soft_label(i / 100.0, 0.5));
    EXPECT_LE(u, prev);
    prev = u;
  }
  EXPECT_THROW(soft_label(1.5, {0.5}), Error);
  EXPECT_THROW(soft_label(0.5, {1.0}), Error);
}

TEST(AdapterLoss, Examples) {
  EXPECT_NEAR(adapter_loss(1, 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(adapter_loss(0, 1e-7), oracle::bce(0, 1e-7), 1e-12);
  EXPECT_LT(adapter_loss(0, 1e-7), 1e-6);
  EXPECT_LT(adapter_loss(1, 1 - 1e-7), 1e-6);
  EXPECT_TRUE(std::isfinite(adapter_loss(1, 0.0)));
  EXPECT_TRUE(std::isfinite(adapter_loss(0, 1.0)));
  SplitMix64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const double w = rng.uniform();
    for (int u : {0, 1}) {
      EXPECT_GE(adapter_loss(u, w), 0.0);
      EXPECT_NEAR(adapter_loss(u, w), oracle::bce(u, w), 1e-9);
    }
  }
}

TEST(FameWeight, Examples) {
  EXPECT_DOUBLE_EQ(fame_weight(0.5, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(fame_weight(0.8, 0.2), 0.5);
  SplitMix64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.001, 0.999);
    const double o = rng.uniform(0.001, 0.999);
    const double f = fame_weight(a, o);
    EXPECT_EQ(fame_weight(a, a), a);
    EXPECT_GE(f, std::min(a, o));
    EXPECT_LE(f, std::max(a, o));
    EXPECT_NEAR(f, oracle::fame(a, o), 1e-15);
  }
  EXPECT_THROW(fame_weight(0.0, 0.5), Error);
  EXPECT_THROW(fame_weight(0.5, 1.0), Error);
}

struct Fixture {
  std::vector<double> v, r, tp, tn;
  AdapterSample sample(double p_t) const { return AdapterSample{v, r, p_t, tp, tn}; }
};

Fixture make_fixture(std::uint64_t seed) {
  SplitMix64 rng(seed);
  Fixture f;
  f.v = unit(rng, kD);
  f.r = nonneg(rng, kR);
  f.tp = unit(rng, kD);
  f.tn = unit(rng, kD);
  return f;
}

TEST(AdapterStep, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Adapter a = Adapter::random(small_config(), seed);
    const Fixture f = make_fixture(seed + 100);
    for (double p_t : {0.2, 0.8}) {
      const AdapterSample s = f.sample(p_t);
      AdapterGradient g;
      adapter_batch_loss(a, {&s, 1}, {0.5}, &g);
      const auto analytic = flat_grad(g);
      const double h = 1e-4;
      std::vector<double> numeric(analytic.size());
      for (std::size_t i = 0; i < a.parameter_count(); ++i) {
        const double x = a.parameter(i);
        a.set_parameter(i, x + h);
        const double up = adapter_batch_loss(a, {&s, 1}, {0.5}, nullptr);
        a.set_parameter(i, x - h);
        const double down = adapter_batch_loss(a, {&s, 1}, {0.5}, nullptr);
        a.set_parameter(i, x);
        numeric[i] = (up - down) / (2 * h);
      }
      double err = 0, scale = 0;
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        err = std::max(err, std::abs(analytic[i] - numeric[i]));
        scale = std::max(scale, std::abs(numeric[i]));
      }
      ASSERT_GT(scale, 0.0);
      EXPECT_LE(err / scale, 1e-4) << "seed " << seed << " p_t " << p_t;
    }
  }
}

TEST(AdapterStep, SatisfiedTargetsBarelyMove) {
  // Output aligned with t_pos pushes w_offset to the clamp, matching u = 0.
  AdapterConfig c{kD + kR, kD, kD, 0.01};
  Adapter a(c);
  Fixture f = make_fixture(21);
  std::fill(f.tp.begin(), f.tp.end(), 0.0);
  std::fill(f.tn.begin(), f.tn.end(), 0.0);
  f.tp[0] = 1.0;
  f.tn[1] = 1.0;
  a.b1()[0] = 1.0;
  a.w2()[0 * c.hidden_dim + 0] = 100.0;
  const AdapterSample s = f.sample(0.9);
  const auto before = a.flat_parameters();
  const double loss = adapter_step(a, {&s, 1}, {0.5});
  EXPECT_LT(loss, 1e-6);
  const auto after = a.flat_parameters();
  double delta = 0;
  for (std::size_t i = 0; i < before.size(); ++i) delta = std::max(delta, std::abs(after[i] - before[i]));
  EXPECT_LT(delta, 1e-9);
}

TEST(AdapterStep, DescentOnFixedBatch) {
  Adapter a = Adapter::random(small_config(1e-3), 31);
  std::vector<Fixture> fx;
  for (std::uint64_t s = 0; s < 6; ++s) fx.push_back(make_fixture(300 + s));
  std::vector<AdapterSample> batch;
  for (std::size_t i = 0; i < fx.size(); ++i) batch.push_back(fx[i].sample(i % 2 ? 0.9 : 0.1));
  double prev = adapter_step(a, batch, {0.5});
  for (int step = 0; step < 100; ++step) {
    const double loss = adapter_step(a, batch, {0.5});
    EXPECT_LE(loss, prev + 1e-12);
    prev = loss;
  }
  EXPECT_EQ(a.step_count(), 101u);
}

TEST(AdapterStep, DirectionFollowsSoftLabel) {
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const Fixture f = make_fixture(seed);
    const Adapter base = Adapter::random(small_config(1e-3), seed);
    const double w0 = offset_weight(base.adapt(f.v, f.r), f.tp, f.tn);

    Adapter up = base;
    const AdapterSample s1 = f.sample(0.1);
    adapter_step(up, {&s1, 1}, {0.5});
    EXPECT_GE(offset_weight(up.adapt(f.v, f.r), f.tp, f.tn), w0 - 1e-15);

    Adapter down = base;
    const AdapterSample s0 = f.sample(0.9);
    adapter_step(down, {&s0, 1}, {0.5});
    EXPECT_LE(offset_weight(down.adapt(f.v, f.r), f.tp, f.tn), w0 + 1e-15);
  }
}

TEST(AdapterStep, EmptyBatchAndNonFinite) {
  Adapter a = Adapter::random(small_config(), 1);
  EXPECT_THROW(adapter_step(a, {}, {0.5}), Error);
  Fixture f = make_fixture(2);
  f.v[0] = NAN;
  const AdapterSample s = f.sample(0.3);
  const auto before = a.flat_parameters();
  try {
    adapter_step(a, {&s, 1}, {0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kNumeric || e.code() == ErrorCode::kInput);
  }
  EXPECT_EQ(a.flat_parameters(), before);
}

TEST(AdapterCheckpoint, RoundTrip) {
  testing_support::TempDir dir("adapter");
  Adapter a = Adapter::random(small_config(), 77);
  const Fixture f = make_fixture(5);
  const AdapterSample s = f.sample(0.2);
  adapter_step(a, {&s, 1}, {0.5});
  a.save(dir / "adapter.json");
  const Adapter b = Adapter::load(dir / "adapter.json");
  EXPECT_EQ(b.flat_parameters(), a.flat_parameters());
  EXPECT_EQ(b.step_count(), 1u);
  EXPECT_EQ(b.config().hidden_dim, 16u);
}

TEST(AdapterConfig, Validation) {
  EXPECT_THROW(Adapter(AdapterConfig{0, 4, 4, 0.01}), Error);
  EXPECT_THROW(Adapter(AdapterConfig{4, 4, 4, -0.01}), Error);
  EXPECT_NO_THROW(Adapter(AdapterConfig{4, 4, 4, 0.0}));
  EXPECT_EQ(AdapterConfig{}.hidden_dim, 512u);
  EXPECT_EQ(AdapterConfig{}.learning_rate, 0.01);
}

}  // namespace
}  // namespace clipce::fame
