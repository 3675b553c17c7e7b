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
#include "detect/boxes.hpp"
#include "image/image.hpp"

namespace clipce::detect {

struct DetectorDescriptor {
  std::string backend_id;
  int num_classes = 0;  // object classes, background excluded
  std::size_t roi_feature_dim = 0;
};

// Inference-side contract every backend implements.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectorDescriptor descriptor() const = 0;
  virtual std::vector<Detection> predict(const Image& image, double score_threshold, double nms_iou) const = 0;
};

struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int channels, int height, int width)
      : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width, 0.0) {}

  double& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  double at(int ci, int y, int x) const { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
};

struct TwoStageConfig {
  int conv1_channels = 8;
  int conv2_channels = 16;
  std::vector<double> anchor_sizes{12.0, 20.0, 32.0};
  int roi_grid = 3;
  int roi_samples = 2;
  int head_hidden = 64;
  int pre_nms_top = 200;
  double rpn_nms_iou = 0.7;
  int post_nms_train = 32;
  int post_nms_test = 50;

  static constexpr int kStride = 4;

  std::size_t pooled_dim() const { return static_cast<std::size_t>(conv2_channels) * roi_grid * roi_grid; }
  int num_anchors() const { return static_cast<int>(anchor_sizes.size()); }

  Json to_json() const;
  static TwoStageConfig from_json(const Json& j);
};

enum ParamIndex : std::size_t {
  kConv1W, kConv1B, kConv2W, kConv2B,
  kRpnClsW, kRpnClsB, kRpnRegW, kRpnRegB,
  kFcW, kFcB, kClsW, kClsB, kBoxW, kBoxB,
  kNumParamTensors
};

// Fixed-order list of parameter tensors; gradients and optimizer state use
// the same layout.
struct ParamSet {
  std::vector<std::vector<double>> tensors;

  std::size_t size() const;
  ParamSet zeros_like() const;
  std::vector<double>& operator[](std::size_t i) { return tensors[i]; }
  const std::vector<double>& operator[](std::size_t i) const { return tensors[i]; }
  double& flat(std::size_t i);
  double flat(std::size_t i) const;
  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

const char* param_name(std::size_t index);

struct BackboneState {
  Tensor3 input;
  Tensor3 c1_pre;
  Tensor3 p1;
  Tensor3 c2_pre;
  Tensor3 feat;
};

struct RpnOutput {
  int fh = 0, fw = 0, num_anchors = 0;
  std::vector<Box> anchors;      // location-major, then anchor size
  std::vector<double> logits;    // objectness per anchor
  std::vector<Deltas> deltas;    // per anchor
};

struct HeadOutput {
  std::vector<Box> rois;
  std::vector<std::vector<double>> pooled;
  std::vector<std::vector<double>> hidden_pre;
  std::vector<std::vector<double>> hidden;  // ROI feature fed to the adapter
  std::vector<std::vector<double>> logits;  // index 0 = background
  std::vector<std::vector<double>> probs;
  std::vector<Deltas> deltas;
};

// Miniature two-stage detector: two conv+ReLU+avgpool stages (stride 4), a
// 1x1-conv proposal head over square anchors, RoIAlign to a fixed grid and a
// two-layer classification/regression head.
class TwoStageDetector final : public Detector {
 public:
  static constexpr const char* kBackendId = "two_stage_ref";

  TwoStageDetector(TwoStageConfig config, std::vector<std::string> class_names, std::uint64_t seed);

  DetectorDescriptor descriptor() const override;
  std::vector<Detection> predict(const Image& image, double score_threshold, double nms_iou) const override;

  const TwoStageConfig& config() const { return config_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int num_classes() const { return static_cast<int>(class_names_.size()); }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  BackboneState backbone(const Image& image) const;
  RpnOutput rpn(const Tensor3& feat) const;
  std::vector<Box> proposals(const RpnOutput& rpn_out, int image_width, int image_height, int keep) const;
  HeadOutput head(const Tensor3& feat, std::vector<Box> rois) const;

  // Backward passes accumulate parameter gradients into `grad` and feature
  // gradients into `d_feat` (same shape as the feature map).
  void head_backward(const Tensor3& feat, const HeadOutput& out, std::span<const std::vector<double>> d_logits,
                     std::span<const Deltas> d_deltas, Tensor3& d_feat, ParamSet& grad) const;
  void rpn_backward(const Tensor3& feat, const RpnOutput& out, std::span<const double> d_logits,
                    std::span<const Deltas> d_deltas, Tensor3& d_feat, ParamSet& grad) const;
  void backbone_backward(const BackboneState& state, const Tensor3& d_feat, ParamSet& grad) const;

  Json to_json() const;
  static TwoStageDetector from_json(const Json& j);
  void save(const std::filesystem::path& path) const;
  static TwoStageDetector load(const std::filesystem::path& path);

 private:
  TwoStageConfig config_;
  std::vector<std::string> class_names_;
  ParamSet params_;
};

}  // namespace clipce::detect
