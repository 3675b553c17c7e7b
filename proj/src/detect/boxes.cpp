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

#include "detect/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "common/error.hpp"

namespace clipce::detect {

namespace {

constexpr double kMaxLogScale = 4.135166556742356;  // log(1000 / 16)

}  // namespace

double iou(const Box& a, const Box& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  // Areas from corner differences, like the intersection, so iou(b, b) == 1.
  const double area_a = (a.x2() - a.x) * (a.y2() - a.y);
  const double area_b = (b.x2() - b.x) * (b.y2() - b.y);
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_threshold) {
  require(boxes.size() == scores.size(), ErrorCode::kInput, "nms: boxes and scores differ in length");
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  std::vector<bool> suppressed(boxes.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (suppressed[a]) continue;
    kept.push_back(a);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t b = order[j];
      if (!suppressed[b] && iou(boxes[a], boxes[b]) > iou_threshold) suppressed[b] = true;
    }
  }
  return kept;
}

std::vector<ProposalMatch> match_positive_proposals(std::span<const Box> proposals, std::span<const Box> gts,
                                                    double threshold) {
  std::vector<ProposalMatch> out(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t p = 0; p < proposals.size(); ++p) {
      const double v = iou(proposals[p], gts[g]);
      if (v > best) {
        best = v;
        best_idx = p;
      }
    }
    if (!proposals.empty() && best > threshold) out[g] = ProposalMatch{best_idx, best};
  }
  return out;
}

Deltas encode_deltas(const Box& ref, const Box& target) {
  return {(target.cx() - ref.cx()) / ref.w, (target.cy() - ref.cy()) / ref.h, std::log(target.w / ref.w),
          std::log(target.h / ref.h)};
}

Box decode_deltas(const Box& ref, const Deltas& d) {
  const double cx = ref.cx() + d[0] * ref.w;
  const double cy = ref.cy() + d[1] * ref.h;
  const double w = ref.w * std::exp(std::min(d[2], kMaxLogScale));
  const double h = ref.h * std::exp(std::min(d[3], kMaxLogScale));
  return Box{cx - 0.5 * w, cy - 0.5 * h, w, h};
}

std::vector<Detection> classwise_nms(std::vector<Detection> detections, double iou_threshold) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < detections.size(); ++i) by_class[detections[i].class_index].push_back(i);
  std::vector<Detection> out;
  for (const auto& [cls, idx] : by_class) {
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t i : idx) {
      boxes.push_back(detections[i].box);
      scores.push_back(detections[i].score);
    }
    for (std::size_t k : nms(boxes, scores, iou_threshold)) out.push_back(detections[idx[k]]);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return out;
}

}  // namespace clipce::detect
