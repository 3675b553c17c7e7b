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

#include "eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <utility>

#include "ame/ame.hpp"
#include "common/error.hpp"
#include "detect/boxes.hpp"
#include "image/image.hpp"

namespace clipce::eval {

ApResult average_precision(std::span<const ScoredBox> detections, std::span<const GroundTruthBox> gts,
                           double iou_threshold) {
  ApResult out;
  if (gts.empty()) return out;
  std::map<std::int64_t, std::vector<std::size_t>> by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) by_image[gts[g].image_id].push_back(g);
  std::vector<bool> taken(gts.size(), false);

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const ScoredBox& det = detections[d];
    int best = -1;
    double best_iou = iou_threshold;
    if (auto it = by_image.find(det.image_id); it != by_image.end()) {
      for (std::size_t g : it->second) {
        if (taken[g]) continue;
        const double v = detect::iou(det.box, gts[g].box);
        if (v >= best_iou && (best < 0 || v > best_iou)) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
    }
    if (best >= 0) {
      taken[best] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(d + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  out.matched = tp;
  // Precision envelope from the right, then area over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    out.ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return out;
}

EvalReport evaluate_detections(const data::DatasetManifest& manifest,
                               const std::map<std::int64_t, std::vector<detect::Detection>>& detections,
                               double iou_threshold) {
  require(!manifest.entries.empty(), ErrorCode::kInput, "evaluation dataset has no images");
  const std::size_t k = manifest.class_names.size();
  std::vector<std::vector<ScoredBox>> dets(k);
  std::vector<std::vector<GroundTruthBox>> gts(k);
  EvalReport report;
  for (const auto& entry : manifest.entries) {
    for (const auto& a : entry.annotations) gts[a.class_index].push_back({entry.image_id, a.bbox});
    auto it = detections.find(entry.image_id);
    if (it == detections.end()) continue;
    for (const detect::Detection& d : it->second) {
      require(d.class_index >= 0 && static_cast<std::size_t>(d.class_index) < k, ErrorCode::kInput,
              "detection class index out of range");
      dets[d.class_index].push_back({entry.image_id, d.box, d.score});
      ++report.counts.detections;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    report.counts.gt += gts[c].size();
    // Fixed visiting order: score, then image, then per-image emission order.
    std::stable_sort(dets[c].begin(), dets[c].end(), [](const ScoredBox& a, const ScoredBox& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.image_id < b.image_id;
    });
    if (gts[c].empty()) {
      report.excluded_classes.push_back(manifest.class_names[c]);
      continue;
    }
    const ApResult r = average_precision(dets[c], gts[c], iou_threshold);
    report.per_class_ap[manifest.class_names[c]] = r.ap;
    report.counts.matched += r.matched;
    sum += r.ap;
  }
  require(!report.per_class_ap.empty(), ErrorCode::kInput, "evaluation dataset has no annotations");
  report.map50 = sum / static_cast<double>(report.per_class_ap.size());
  return report;
}

EvalReport evaluate(const detect::Detector& detector, const data::DatasetManifest& manifest,
                    const EvalOptions& options) {
  require(!manifest.entries.empty(), ErrorCode::kInput, "evaluation dataset has no images");
  std::map<std::int64_t, std::vector<detect::Detection>> detections;
  for (const auto& entry : manifest.entries) {
    const Image image = read_png(manifest.image_file(entry));
    detections[entry.image_id] = detector.predict(image, options.score_threshold, options.nms_iou);
  }
  return evaluate_detections(manifest, detections, options.iou_threshold);
}

Json to_json(const EvalReport& report) {
  return Json{{"schema", "eval_report/v1"},
              {"map50", report.map50},
              {"per_class_ap", report.per_class_ap},
              {"excluded_classes", report.excluded_classes},
              {"counts",
               {{"gt", report.counts.gt}, {"detections", report.counts.detections}, {"matched", report.counts.matched}}}};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::kInput, "spearman needs equally long inputs");
  if (a.size() < 2) return std::nullopt;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

WeightReport weight_analysis(const ame::WeightCache& cache, std::span<const detect::EpochLog> log,
                             const data::DatasetManifest* manifest, int epoch) {
  WeightReport report;
  const detect::EpochLog* chosen = nullptr;
  if (!log.empty()) {
    if (epoch == 0) {
      chosen = &log.back();
    } else {
      for (const auto& e : log)
        if (e.epoch == epoch) chosen = &e;
      require(chosen != nullptr, ErrorCode::kInput, "training log has no epoch " + std::to_string(epoch));
    }
    report.epoch = chosen->epoch;
  }
  std::map<std::pair<std::int64_t, std::int64_t>, const detect::ObjectLog*> by_key;
  if (chosen)
    for (const auto& o : chosen->objects) by_key[{o.image_id, o.annotation_id}] = &o;
  std::map<std::pair<std::int64_t, std::int64_t>, std::optional<double>> proxy;
  if (manifest)
    for (const auto& entry : manifest->entries)
      for (const auto& a : entry.annotations) proxy[{entry.image_id, a.annotation_id}] = a.degradation;

  std::size_t joined = 0;
  for (const ame::CacheRecord& rec : cache.records()) {
    const auto key = std::make_pair(rec.image_id, rec.annotation_id);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      ++report.skipped;
      continue;
    }
    ++joined;
    WeightReportRow row;
    row.image_id = rec.image_id;
    row.annotation_id = rec.annotation_id;
    row.class_name = rec.class_name;
    row.w_ame = rec.w_ame;
    row.p_t = it->second->p_t;
    row.focal_w = ame::focal_weight(row.p_t, ame::FocalParams{2.0});
    if (manifest) {
      auto p = proxy.find(key);
      if (p != proxy.end()) row.degradation = p->second;
    } else {
      row.degradation = it->second->degradation;
    }
    report.rows.push_back(std::move(row));
  }
  report.skipped += by_key.size() - joined;

  std::vector<double> deg, wa, wf;
  for (const auto& r : report.rows) {
    if (!r.degradation) continue;
    deg.push_back(*r.degradation);
    wa.push_back(r.w_ame);
    wf.push_back(r.focal_w);
  }
  report.spearman_w_ame = spearman(wa, deg);
  report.spearman_focal = spearman(wf, deg);
  return report;
}

std::string to_csv(const WeightReport& report) {
  std::ostringstream out;
  out << "image_id,annotation_id,class,degradation,w_ame,focal_w,p_t\n";
  for (const auto& r : report.rows) {
    out << r.image_id << ',' << r.annotation_id << ',' << r.class_name << ','
        << (r.degradation ? fmt(*r.degradation) : "") << ',' << fmt(r.w_ame) << ',' << fmt(r.focal_w) << ','
        << fmt(r.p_t) << '\n';
  }
  return out.str();
}

Json summary_json(const WeightReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"schema", "weight_report/v1"},
              {"columns", {"image_id", "annotation_id", "class", "degradation", "w_ame", "focal_w", "p_t"}},
              {"rows", report.rows.size()},
              {"skipped", report.skipped},
              {"epoch", report.epoch},
              {"spearman",
               {{"w_ame_vs_degradation", opt(report.spearman_w_ame)},
                {"focal_w_vs_degradation", opt(report.spearman_focal)}}}};
}

}  // namespace clipce::eval
