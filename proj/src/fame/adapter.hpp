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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "common/io.hpp"

namespace clipce::fame {

inline constexpr double kClampEpsilon = 1e-7;

struct AdapterConfig {
  std::size_t input_dim = 0;   // embedding dim + ROI feature dim
  std::size_t hidden_dim = 512;
  std::size_t output_dim = 0;  // embedding dim
  double learning_rate = 0.01;
};

struct SoftLabelParams {
  double theta = 0.5;
};

// Intermediate values of one forward pass, kept for backpropagation.
struct Activations {
  std::vector<double> input;
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> output_pre;
  std::vector<double> output;
};

struct AdapterGradient {
  std::vector<double> w1, b1, w2, b2;
};

// Two fully connected layers, each followed by a rectifier, applied to the
// concatenation [visual embedding, ROI feature].
class Adapter {
 public:
  explicit Adapter(AdapterConfig config);

  // He-uniform weights, zero biases.
  static Adapter random(AdapterConfig config, std::uint64_t seed);

  const AdapterConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  std::vector<double> adapt(std::span<const double> visual, std::span<const double> roi) const;
  Activations forward(std::span<const double> visual, std::span<const double> roi) const;

  void apply_gradient(const AdapterGradient& grad, double learning_rate);

  // Flat parameter view (w1, b1, w2, b2), for checkpoint diffs and gradient checks.
  std::size_t parameter_count() const;
  double parameter(std::size_t i) const;
  void set_parameter(std::size_t i, double value);
  std::vector<double> flat_parameters() const;

  // Row-major hidden x input.
  std::vector<double>& w1() { return w1_; }
  const std::vector<double>& w1() const { return w1_; }
  std::vector<double>& b1() { return b1_; }
  const std::vector<double>& b1() const { return b1_; }
  // Row-major output x hidden.
  std::vector<double>& w2() { return w2_; }
  const std::vector<double>& w2() const { return w2_; }
  std::vector<double>& b2() { return b2_; }
  const std::vector<double>& b2() const { return b2_; }

  Json to_json() const;
  static Adapter from_json(const Json& j);
  void save(const std::filesystem::path& path) const;
  static Adapter load(const std::filesystem::path& path);

 private:
  AdapterConfig config_;
  std::vector<double> w1_, b1_, w2_, b2_;
  std::uint64_t step_count_ = 0;
};

double offset_weight(std::span<const double> adapted, std::span<const double> t_pos, std::span<const double> t_neg);

// 0 when p_t > theta, 1 otherwise.
int soft_label(double p_t, const SoftLabelParams& params);

// Binary cross-entropy with w_offset clamped to [eps, 1 - eps].
double adapter_loss(int u, double w_offset);

double fame_weight(double w_ame, double w_offset);

struct AdapterSample {
  std::span<const double> visual;
  std::span<const double> roi;
  double p_t = 0.0;
  std::span<const double> t_pos;
  std::span<const double> t_neg;
};

// Mean adapter loss over the batch; fills `grad` (if non-null) with its
// analytic gradient.
double adapter_batch_loss(const Adapter& adapter, std::span<const AdapterSample> batch,
                          const SoftLabelParams& params, AdapterGradient* grad);

// One SGD step on the mean batch loss. Returns the pre-step loss. A non-finite
// loss leaves the adapter untouched and raises a numeric error.
double adapter_step(Adapter& adapter, std::span<const AdapterSample> batch, const SoftLabelParams& params);

}  // namespace clipce::fame
