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

#include "detect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "loss/loss.hpp"

namespace clipce::detect {

namespace {

constexpr int kK = 3;  // conv kernel size

Tensor3 conv3x3(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b, int cout) {
  Tensor3 out(cout, in.h, in.w);
  for (int co = 0; co < cout; ++co) {
    double* o = &out.v[static_cast<std::size_t>(co) * in.h * in.w];
    std::fill(o, o + static_cast<std::size_t>(in.h) * in.w, b[co]);
    for (int ci = 0; ci < in.c; ++ci) {
      for (int ky = 0; ky < kK; ++ky) {
        for (int kx = 0; kx < kK; ++kx) {
          const double wv = w[((static_cast<std::size_t>(co) * in.c + ci) * kK + ky) * kK + kx];
          const int x_lo = std::max(0, 1 - kx);
          const int x_hi = std::min(in.w, in.w + 1 - kx);
          for (int y = std::max(0, 1 - ky); y < std::min(in.h, in.h + 1 - ky); ++y) {
            const double* src = &in.v[(static_cast<std::size_t>(ci) * in.h + y + ky - 1) * in.w + kx - 1];
            double* dst = o + static_cast<std::size_t>(y) * in.w;
            for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
  return out;
}

// Accumulates dW, db and (if d_in is non-null) the input gradient.
void conv3x3_backward(const Tensor3& in, const std::vector<double>& w, const Tensor3& d_out, std::vector<double>& dw,
                      std::vector<double>& db, Tensor3* d_in) {
  for (int co = 0; co < d_out.c; ++co) {
    const double* g = &d_out.v[static_cast<std::size_t>(co) * in.h * in.w];
    double bsum = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(in.h) * in.w; ++i) bsum += g[i];
    db[co] += bsum;
    for (int ci = 0; ci < in.c; ++ci) {
      for (int ky = 0; ky < kK; ++ky) {
        for (int kx = 0; kx < kK; ++kx) {
          const std::size_t wi = ((static_cast<std::size_t>(co) * in.c + ci) * kK + ky) * kK + kx;
          const double wv = w[wi];
          const int x_lo = std::max(0, 1 - kx);
          const int x_hi = std::min(in.w, in.w + 1 - kx);
          double acc = 0.0;
          for (int y = std::max(0, 1 - ky); y < std::min(in.h, in.h + 1 - ky); ++y) {
            const std::size_t src_off = (static_cast<std::size_t>(ci) * in.h + y + ky - 1) * in.w + kx - 1;
            const double* src = &in.v[src_off];
            const double* gy = g + static_cast<std::size_t>(y) * in.w;
            for (int x = x_lo; x < x_hi; ++x) acc += gy[x] * src[x];
            if (d_in) {
              double* dst = &d_in->v[src_off];
              for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * gy[x];
            }
          }
          dw[wi] += acc;
        }
      }
    }
  }
}

Tensor3 relu(const Tensor3& in) {
  Tensor3 out = in;
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  return out;
}

Tensor3 avgpool2(const Tensor3& in) {
  Tensor3 out(in.c, in.h / 2, in.w / 2);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) + in.at(c, 2 * y + 1, 2 * x) +
                                  in.at(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

// Gradient of avgpool2 followed by the ReLU mask of `pre`.
Tensor3 avgpool2_relu_backward(const Tensor3& d_out, const Tensor3& pre) {
  Tensor3 d(pre.c, pre.h, pre.w);
  for (int c = 0; c < pre.c; ++c) {
    for (int y = 0; y < d_out.h; ++y) {
      for (int x = 0; x < d_out.w; ++x) {
        const double g = 0.25 * d_out.at(c, y, x);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            if (pre.at(c, 2 * y + dy, 2 * x + dx) > 0.0) d.at(c, 2 * y + dy, 2 * x + dx) = g;
          }
        }
      }
    }
  }
  return d;
}

struct Tap {
  std::size_t offset;  // y * w + x within one channel plane
  double weight;
};

// Bilinear taps at feature coordinates (px, py), RoIAlign border convention.
int bilinear_taps(double px, double py, int w, int h, Tap taps[4]) {
  if (py < -1.0 || py > h || px < -1.0 || px > w) return 0;
  py = std::max(py, 0.0);
  px = std::max(px, 0.0);
  int y0 = static_cast<int>(py);
  int x0 = static_cast<int>(px);
  int y1, x1;
  if (y0 >= h - 1) {
    y0 = y1 = h - 1;
    py = y0;
  } else {
    y1 = y0 + 1;
  }
  if (x0 >= w - 1) {
    x0 = x1 = w - 1;
    px = x0;
  } else {
    x1 = x0 + 1;
  }
  const double ly = py - y0, lx = px - x0;
  const double hy = 1.0 - ly, hx = 1.0 - lx;
  taps[0] = {static_cast<std::size_t>(y0) * w + x0, hy * hx};
  taps[1] = {static_cast<std::size_t>(y0) * w + x1, hy * lx};
  taps[2] = {static_cast<std::size_t>(y1) * w + x0, ly * hx};
  taps[3] = {static_cast<std::size_t>(y1) * w + x1, ly * lx};
  return 4;
}

template <typename Fn>
void for_each_roi_sample(const TwoStageConfig& cfg, const Box& roi, int fw, int fh, Fn&& fn) {
  const double inv_stride = 1.0 / TwoStageConfig::kStride;
  const int g = cfg.roi_grid;
  const int s = cfg.roi_samples;
  const double bin_w = roi.w * inv_stride / g;
  const double bin_h = roi.h * inv_stride / g;
  const double x0 = roi.x * inv_stride;
  const double y0 = roi.y * inv_stride;
  const double norm = 1.0 / (s * s);
  Tap taps[4];
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      for (int si = 0; si < s; ++si) {
        const double py = y0 + (i + (si + 0.5) / s) * bin_h - 0.5;
        for (int sj = 0; sj < s; ++sj) {
          const double px = x0 + (j + (sj + 0.5) / s) * bin_w - 0.5;
          const int n = bilinear_taps(px, py, fw, fh, taps);
          for (int t = 0; t < n; ++t) fn(i * g + j, taps[t].offset, taps[t].weight * norm);
        }
      }
    }
  }
}

void init_normal(std::vector<double>& v, SplitMix64& rng, double stddev) {
  for (double& x : v) x = stddev * rng.normal();
}

}  // namespace

Json TwoStageConfig::to_json() const {
  return Json{{"conv1_channels", conv1_channels}, {"conv2_channels", conv2_channels},
              {"anchor_sizes", anchor_sizes},     {"roi_grid", roi_grid},
              {"roi_samples", roi_samples},       {"head_hidden", head_hidden},
              {"pre_nms_top", pre_nms_top},       {"rpn_nms_iou", rpn_nms_iou},
              {"post_nms_train", post_nms_train}, {"post_nms_test", post_nms_test}};
}

TwoStageConfig TwoStageConfig::from_json(const Json& j) {
  TwoStageConfig c;
  c.conv1_channels = j.value("conv1_channels", c.conv1_channels);
  c.conv2_channels = j.value("conv2_channels", c.conv2_channels);
  c.anchor_sizes = j.value("anchor_sizes", c.anchor_sizes);
  c.roi_grid = j.value("roi_grid", c.roi_grid);
  c.roi_samples = j.value("roi_samples", c.roi_samples);
  c.head_hidden = j.value("head_hidden", c.head_hidden);
  c.pre_nms_top = j.value("pre_nms_top", c.pre_nms_top);
  c.rpn_nms_iou = j.value("rpn_nms_iou", c.rpn_nms_iou);
  c.post_nms_train = j.value("post_nms_train", c.post_nms_train);
  c.post_nms_test = j.value("post_nms_test", c.post_nms_test);
  require(c.conv1_channels > 0 && c.conv2_channels > 0 && c.roi_grid > 0 && c.roi_samples > 0 && c.head_hidden > 0 &&
              !c.anchor_sizes.empty() && c.pre_nms_top > 0 && c.post_nms_train > 0 && c.post_nms_test > 0,
          ErrorCode::kConfig, "invalid detector architecture settings");
  return c;
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& t : tensors) out.tensors.emplace_back(t.size(), 0.0);
  return out;
}

double& ParamSet::flat(std::size_t i) {
  for (auto& t : tensors) {
    if (i < t.size()) return t[i];
    i -= t.size();
  }
  fail(ErrorCode::kInput, "parameter index out of range");
}

double ParamSet::flat(std::size_t i) const { return const_cast<ParamSet&>(*this).flat(i); }

const char* param_name(std::size_t index) {
  static constexpr const char* kNames[] = {"conv1_w", "conv1_b", "conv2_w", "conv2_b", "rpn_cls_w",
                                           "rpn_cls_b", "rpn_reg_w", "rpn_reg_b", "fc_w", "fc_b",
                                           "cls_w", "cls_b", "box_w", "box_b"};
  return index < kNumParamTensors ? kNames[index] : "?";
}

TwoStageDetector::TwoStageDetector(TwoStageConfig config, std::vector<std::string> class_names, std::uint64_t seed)
    : config_(std::move(config)), class_names_(std::move(class_names)) {
  require(!class_names_.empty(), ErrorCode::kConfig, "detector needs at least one class");
  const std::size_t c1 = config_.conv1_channels;
  const std::size_t c2 = config_.conv2_channels;
  const std::size_t a = config_.num_anchors();
  const std::size_t pooled = config_.pooled_dim();
  const std::size_t hid = config_.head_hidden;
  const std::size_t k = class_names_.size() + 1;
  params_.tensors = {
      std::vector<double>(c1 * 3 * kK * kK), std::vector<double>(c1, 0.0),
      std::vector<double>(c2 * c1 * kK * kK), std::vector<double>(c2, 0.0),
      std::vector<double>(a * c2), std::vector<double>(a, 0.0),
      std::vector<double>(4 * a * c2), std::vector<double>(4 * a, 0.0),
      std::vector<double>(hid * pooled), std::vector<double>(hid, 0.0),
      std::vector<double>(k * hid), std::vector<double>(k, 0.0),
      std::vector<double>(4 * hid), std::vector<double>(4, 0.0),
  };
  SplitMix64 rng(mix_seed(seed, 0xde7ec7));
  init_normal(params_[kConv1W], rng, std::sqrt(2.0 / (3 * kK * kK)));
  init_normal(params_[kConv2W], rng, std::sqrt(2.0 / (c1 * kK * kK)));
  init_normal(params_[kRpnClsW], rng, 0.01);
  init_normal(params_[kRpnRegW], rng, 0.01);
  init_normal(params_[kFcW], rng, std::sqrt(2.0 / pooled));
  init_normal(params_[kClsW], rng, 0.01);
  init_normal(params_[kBoxW], rng, 0.001);
}

DetectorDescriptor TwoStageDetector::descriptor() const {
  return DetectorDescriptor{kBackendId, num_classes(), static_cast<std::size_t>(config_.head_hidden)};
}

BackboneState TwoStageDetector::backbone(const Image& image) const {
  require(image.width >= TwoStageConfig::kStride && image.height >= TwoStageConfig::kStride, ErrorCode::kInput,
          "image too small for the detector");
  BackboneState s;
  s.input = Tensor3(3, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) s.input.at(c, y, x) = image.at(x, y, std::min(c, image.channels - 1)) - 0.5;
    }
  }
  s.c1_pre = conv3x3(s.input, params_[kConv1W], params_[kConv1B], config_.conv1_channels);
  s.p1 = avgpool2(relu(s.c1_pre));
  s.c2_pre = conv3x3(s.p1, params_[kConv2W], params_[kConv2B], config_.conv2_channels);
  s.feat = avgpool2(relu(s.c2_pre));
  return s;
}

RpnOutput TwoStageDetector::rpn(const Tensor3& feat) const {
  RpnOutput out;
  out.fh = feat.h;
  out.fw = feat.w;
  out.num_anchors = config_.num_anchors();
  const int a_count = out.num_anchors;
  const std::size_t locs = static_cast<std::size_t>(feat.h) * feat.w;
  out.anchors.reserve(locs * a_count);
  out.logits.assign(locs * a_count, 0.0);
  out.deltas.assign(locs * a_count, Deltas{0, 0, 0, 0});
  const auto& wc = params_[kRpnClsW];
  const auto& bc = params_[kRpnClsB];
  const auto& wr = params_[kRpnRegW];
  const auto& br = params_[kRpnRegB];
  for (int y = 0; y < feat.h; ++y) {
    for (int x = 0; x < feat.w; ++x) {
      const double cx = (x + 0.5) * TwoStageConfig::kStride;
      const double cy = (y + 0.5) * TwoStageConfig::kStride;
      const std::size_t loc = static_cast<std::size_t>(y) * feat.w + x;
      for (int a = 0; a < a_count; ++a) {
        const double s = config_.anchor_sizes[a];
        out.anchors.push_back(Box{cx - 0.5 * s, cy - 0.5 * s, s, s});
        const std::size_t idx = loc * a_count + a;
        double logit = bc[a];
        for (int c = 0; c < feat.c; ++c) logit += wc[static_cast<std::size_t>(a) * feat.c + c] * feat.at(c, y, x);
        out.logits[idx] = logit;
        for (int k = 0; k < 4; ++k) {
          const std::size_t r = static_cast<std::size_t>(4 * a + k);
          double d = br[r];
          for (int c = 0; c < feat.c; ++c) d += wr[r * feat.c + c] * feat.at(c, y, x);
          out.deltas[idx][k] = d;
        }
      }
    }
  }
  return out;
}

std::vector<Box> TwoStageDetector::proposals(const RpnOutput& r, int image_width, int image_height, int keep) const {
  std::vector<std::size_t> order(r.anchors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.logits[a] > r.logits[b]; });
  std::vector<Box> boxes;
  std::vector<double> scores;
  for (std::size_t idx : order) {
    if (static_cast<int>(boxes.size()) >= config_.pre_nms_top) break;
    Box b = clip_box(decode_deltas(r.anchors[idx], r.deltas[idx]), image_width, image_height);
    if (b.w < 2.0 || b.h < 2.0) continue;
    boxes.push_back(b);
    scores.push_back(r.logits[idx]);
  }
  std::vector<Box> out;
  for (std::size_t k : nms(boxes, scores, config_.rpn_nms_iou)) {
    if (static_cast<int>(out.size()) >= keep) break;
    out.push_back(boxes[k]);
  }
  return out;
}

HeadOutput TwoStageDetector::head(const Tensor3& feat, std::vector<Box> rois) const {
  HeadOutput out;
  out.rois = std::move(rois);
  const std::size_t n = out.rois.size();
  const std::size_t gg = static_cast<std::size_t>(config_.roi_grid) * config_.roi_grid;
  const std::size_t pooled_dim = config_.pooled_dim();
  const std::size_t hid = config_.head_hidden;
  const std::size_t k = class_names_.size() + 1;
  const std::size_t plane = static_cast<std::size_t>(feat.h) * feat.w;
  out.pooled.resize(n);
  out.hidden_pre.resize(n);
  out.hidden.resize(n);
  out.logits.resize(n);
  out.probs.resize(n);
  out.deltas.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double>& pooled = out.pooled[r];
    pooled.assign(pooled_dim, 0.0);
    for_each_roi_sample(config_, out.rois[r], feat.w, feat.h, [&](std::size_t bin, std::size_t off, double wt) {
      for (int c = 0; c < feat.c; ++c) pooled[c * gg + bin] += wt * feat.v[c * plane + off];
    });
    std::vector<double>& hpre = out.hidden_pre[r];
    std::vector<double>& h = out.hidden[r];
    hpre.assign(hid, 0.0);
    h.assign(hid, 0.0);
    for (std::size_t o = 0; o < hid; ++o) {
      const double* row = &params_[kFcW][o * pooled_dim];
      double s = params_[kFcB][o];
      for (std::size_t i = 0; i < pooled_dim; ++i) s += row[i] * pooled[i];
      hpre[o] = s;
      h[o] = s > 0.0 ? s : 0.0;
    }
    out.logits[r].assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double* row = &params_[kClsW][c * hid];
      double s = params_[kClsB][c];
      for (std::size_t i = 0; i < hid; ++i) s += row[i] * h[i];
      out.logits[r][c] = s;
    }
    out.probs[r] = loss::softmax(out.logits[r]);
    for (std::size_t d = 0; d < 4; ++d) {
      const double* row = &params_[kBoxW][d * hid];
      double s = params_[kBoxB][d];
      for (std::size_t i = 0; i < hid; ++i) s += row[i] * h[i];
      out.deltas[r][d] = s;
    }
  }
  return out;
}

void TwoStageDetector::head_backward(const Tensor3& feat, const HeadOutput& out,
                                     std::span<const std::vector<double>> d_logits, std::span<const Deltas> d_deltas,
                                     Tensor3& d_feat, ParamSet& grad) const {
  const std::size_t gg = static_cast<std::size_t>(config_.roi_grid) * config_.roi_grid;
  const std::size_t pooled_dim = config_.pooled_dim();
  const std::size_t hid = config_.head_hidden;
  const std::size_t k = class_names_.size() + 1;
  const std::size_t plane = static_cast<std::size_t>(feat.h) * feat.w;
  std::vector<double> d_hidden(hid);
  std::vector<double> d_pooled(pooled_dim);
  for (std::size_t r = 0; r < out.rois.size(); ++r) {
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    const std::vector<double>& h = out.hidden[r];
    for (std::size_t c = 0; c < k; ++c) {
      const double g = d_logits[r][c];
      if (g == 0.0) continue;
      grad[kClsB][c] += g;
      double* gw = &grad[kClsW][c * hid];
      const double* w = &params_[kClsW][c * hid];
      for (std::size_t i = 0; i < hid; ++i) {
        gw[i] += g * h[i];
        d_hidden[i] += g * w[i];
      }
    }
    for (std::size_t d = 0; d < 4; ++d) {
      const double g = d_deltas[r][d];
      if (g == 0.0) continue;
      grad[kBoxB][d] += g;
      double* gw = &grad[kBoxW][d * hid];
      const double* w = &params_[kBoxW][d * hid];
      for (std::size_t i = 0; i < hid; ++i) {
        gw[i] += g * h[i];
        d_hidden[i] += g * w[i];
      }
    }
    std::fill(d_pooled.begin(), d_pooled.end(), 0.0);
    bool any = false;
    for (std::size_t o = 0; o < hid; ++o) {
      if (out.hidden_pre[r][o] <= 0.0 || d_hidden[o] == 0.0) continue;
      any = true;
      const double g = d_hidden[o];
      grad[kFcB][o] += g;
      double* gw = &grad[kFcW][o * pooled_dim];
      const double* w = &params_[kFcW][o * pooled_dim];
      for (std::size_t i = 0; i < pooled_dim; ++i) {
        gw[i] += g * out.pooled[r][i];
        d_pooled[i] += g * w[i];
      }
    }
    if (!any) continue;
    for_each_roi_sample(config_, out.rois[r], feat.w, feat.h, [&](std::size_t bin, std::size_t off, double wt) {
      for (int c = 0; c < feat.c; ++c) d_feat.v[c * plane + off] += wt * d_pooled[c * gg + bin];
    });
  }
}

void TwoStageDetector::rpn_backward(const Tensor3& feat, const RpnOutput& out, std::span<const double> d_logits,
                                    std::span<const Deltas> d_deltas, Tensor3& d_feat, ParamSet& grad) const {
  const int a_count = out.num_anchors;
  const auto& wc = params_[kRpnClsW];
  const auto& wr = params_[kRpnRegW];
  for (int y = 0; y < feat.h; ++y) {
    for (int x = 0; x < feat.w; ++x) {
      const std::size_t loc = static_cast<std::size_t>(y) * feat.w + x;
      for (int a = 0; a < a_count; ++a) {
        const std::size_t idx = loc * a_count + a;
        const double g = d_logits[idx];
        if (g != 0.0) {
          grad[kRpnClsB][a] += g;
          for (int c = 0; c < feat.c; ++c) {
            grad[kRpnClsW][static_cast<std::size_t>(a) * feat.c + c] += g * feat.at(c, y, x);
            d_feat.at(c, y, x) += g * wc[static_cast<std::size_t>(a) * feat.c + c];
          }
        }
        for (int k = 0; k < 4; ++k) {
          const double gd = d_deltas[idx][k];
          if (gd == 0.0) continue;
          const std::size_t r = static_cast<std::size_t>(4 * a + k);
          grad[kRpnRegB][r] += gd;
          for (int c = 0; c < feat.c; ++c) {
            grad[kRpnRegW][r * feat.c + c] += gd * feat.at(c, y, x);
            d_feat.at(c, y, x) += gd * wr[r * feat.c + c];
          }
        }
      }
    }
  }
}

void TwoStageDetector::backbone_backward(const BackboneState& s, const Tensor3& d_feat, ParamSet& grad) const {
  Tensor3 d_c2 = avgpool2_relu_backward(d_feat, s.c2_pre);
  Tensor3 d_p1(s.p1.c, s.p1.h, s.p1.w);
  conv3x3_backward(s.p1, params_[kConv2W], d_c2, grad[kConv2W], grad[kConv2B], &d_p1);
  Tensor3 d_c1 = avgpool2_relu_backward(d_p1, s.c1_pre);
  conv3x3_backward(s.input, params_[kConv1W], d_c1, grad[kConv1W], grad[kConv1B], nullptr);
}

std::vector<Detection> TwoStageDetector::predict(const Image& image, double score_threshold, double nms_iou) const {
  BackboneState s = backbone(image);
  RpnOutput r = rpn(s.feat);
  HeadOutput h = head(s.feat, proposals(r, image.width, image.height, config_.post_nms_test));
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < h.rois.size(); ++i) {
    Box box = clip_box(decode_deltas(h.rois[i], h.deltas[i]), image.width, image.height);
    if (box.area() <= 0.0) continue;
    for (std::size_t c = 1; c < h.probs[i].size(); ++c) {
      if (h.probs[i][c] >= score_threshold) {
        dets.push_back(Detection{box, static_cast<int>(c) - 1, h.probs[i][c]});
      }
    }
  }
  return classwise_nms(std::move(dets), nms_iou);
}

Json TwoStageDetector::to_json() const {
  Json params = Json::object();
  for (std::size_t i = 0; i < kNumParamTensors; ++i) params[param_name(i)] = params_[i];
  return Json{{"schema", "detector/v1"},
              {"backend_id", kBackendId},
              {"class_names", class_names_},
              {"arch", config_.to_json()},
              {"params", std::move(params)}};
}

TwoStageDetector TwoStageDetector::from_json(const Json& j) {
  try {
    require(j.value("schema", "") == "detector/v1" && j.value("backend_id", "") == kBackendId, ErrorCode::kParse,
            "not a reference detector checkpoint");
    TwoStageDetector d(TwoStageConfig::from_json(j.at("arch")), j.at("class_names").get<std::vector<std::string>>(), 0);
    for (std::size_t i = 0; i < kNumParamTensors; ++i) {
      std::vector<double> v = j.at("params").at(param_name(i)).get<std::vector<double>>();
      require(v.size() == d.params_[i].size(), ErrorCode::kParse,
              std::string("detector parameter size mismatch for ") + param_name(i));
      d.params_[i] = std::move(v);
    }
    return d;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed detector checkpoint: ") + e.what());
  }
}

void TwoStageDetector::save(const std::filesystem::path& path) const { write_text(path, to_json().dump() + "\n"); }

TwoStageDetector TwoStageDetector::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

}  // namespace clipce::detect
