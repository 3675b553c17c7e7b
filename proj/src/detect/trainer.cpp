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

#include "detect/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "common/error.hpp"
#include "common/log.hpp"
#include "common/rng.hpp"

namespace clipce::detect {

namespace {

double smooth_l1(double x) { return std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5; }
double smooth_l1_grad(double x) { return std::abs(x) < 1.0 ? x : (x > 0 ? 1.0 : -1.0); }

double bce_with_logit(double x, double y) { return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
std::optional<double> opt_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

// Everything the trainer needs about one annotated object, fixed for the run.
struct ObjectInfo {
  std::size_t entry = 0;
  std::size_t annotation = 0;
  int class_index = 0;
  embedding::Embedding visual;
  double w_ame = 0.5;
};

struct RoiAssignment {
  int label = 0;        // 0 background, else class_index + 1
  int object = -1;      // index into the image's annotations
};

struct ImageStep {
  BackboneState state;
  RpnOutput rpn;
  std::vector<double> rpn_d_logits;
  std::vector<Deltas> rpn_d_deltas;
  double rpn_loss = 0.0;
  HeadOutput head;
  std::vector<RoiAssignment> assign;
  std::vector<ObjectRecord> objects;
  std::vector<int> gt_row;  // head row of each ground-truth box
};

class Trainer {
 public:
  Trainer(const data::DatasetManifest& manifest, TwoStageDetector& detector,
          const embedding::EmbeddingProvider& provider, fame::Adapter& adapter, const ame::WeightCache* cache,
          const TrainConfig& config)
      : manifest_(manifest), detector_(detector), provider_(provider), adapter_(adapter), config_(config),
        sample_rng_(mix_seed(config.seed, 0x5a3b1e)) {
    momentum_ = detector_.params().zeros_like();
    load_images();
    prepare_objects(cache);
  }

  TrainResult run();

 private:
  void load_images();
  void prepare_objects(const ame::WeightCache* cache);
  ImageStep forward_image(std::size_t entry_index);
  void rpn_targets(ImageStep& step, const data::ManifestEntry& entry, double scale);
  void select_rois(ImageStep& step, const data::ManifestEntry& entry);
  void step_detector(const ParamSet& grad);
  void checkpoint(int epoch) const;

  const data::DatasetManifest& manifest_;
  TwoStageDetector& detector_;
  const embedding::EmbeddingProvider& provider_;
  fame::Adapter& adapter_;
  const TrainConfig& config_;
  SplitMix64 sample_rng_;
  ParamSet momentum_;
  std::vector<Image> images_;
  std::vector<embedding::Embedding> t_pos_, t_neg_;
  std::vector<std::vector<std::size_t>> object_index_;  // [entry][annotation] -> objects_
  std::vector<ObjectInfo> objects_;
  bool used_cache_ = false;
};

void Trainer::load_images() {
  images_.reserve(manifest_.entries.size());
  for (const auto& entry : manifest_.entries) {
    try {
      images_.push_back(read_png(manifest_.image_file(entry)));
    } catch (const Error& e) {
      fail(e.code(), "image_id " + std::to_string(entry.image_id) + ": " + e.what());
    }
  }
}

void Trainer::prepare_objects(const ame::WeightCache* cache) {
  std::vector<embedding::PromptPair> prompts;
  for (const std::string& name : manifest_.class_names) {
    prompts.push_back(embedding::build_prompt_pair(name, config_.template_pos, config_.template_neg));
    t_pos_.push_back(provider_.encode_text(prompts.back().positive_text));
    t_neg_.push_back(provider_.encode_text(prompts.back().negative_text));
  }
  const bool cache_ok =
      cache && ame::compatible(cache->header, expected_cache_header(manifest_, provider_, config_.template_pos,
                                                                    config_.template_neg));
  if (!cache_ok) warn("weight cache missing or stale; computing AME weights on the fly");
  std::size_t missing = 0;
  object_index_.resize(manifest_.entries.size());
  for (std::size_t e = 0; e < manifest_.entries.size(); ++e) {
    const auto& entry = manifest_.entries[e];
    for (std::size_t k = 0; k < entry.annotations.size(); ++k) {
      const auto& a = entry.annotations[k];
      const auto ci = static_cast<std::size_t>(a.class_index);
      ObjectInfo info;
      info.entry = e;
      info.annotation = k;
      info.class_index = a.class_index;
      info.visual = provider_.encode_image_crop(images_[e], a.bbox, embedding::CropHints{a.degradation, prompts[ci]});
      const ame::CacheRecord* rec = cache_ok ? cache->find(entry.image_id, a.annotation_id) : nullptr;
      if (rec) {
        info.w_ame = rec->w_ame;
        used_cache_ = true;
      } else {
        if (cache_ok) ++missing;
        info.w_ame = ame::ame_weight({ame::similarity(info.visual, t_pos_[ci]), ame::similarity(info.visual, t_neg_[ci])});
      }
      object_index_[e].push_back(objects_.size());
      objects_.push_back(std::move(info));
    }
  }
  if (missing > 0) warn(std::to_string(missing) + " objects missing from the weight cache; computed on the fly");
}

void Trainer::rpn_targets(ImageStep& step, const data::ManifestEntry& entry, double scale) {
  const RpnOutput& r = step.rpn;
  const std::size_t n = r.anchors.size();
  std::vector<int> label(n, -1);
  std::vector<int> best_gt(n, -1);
  std::vector<double> best_iou(n, 0.0);
  std::vector<double> gt_best(entry.annotations.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < entry.annotations.size(); ++g) {
      const double v = iou(r.anchors[i], entry.annotations[g].bbox);
      if (v > best_iou[i]) {
        best_iou[i] = v;
        best_gt[i] = static_cast<int>(g);
      }
      gt_best[g] = std::max(gt_best[g], v);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (best_iou[i] < config_.rpn_negative_iou) label[i] = 0;
    if (best_iou[i] >= config_.rpn_positive_iou) label[i] = 1;
    for (std::size_t g = 0; g < entry.annotations.size(); ++g) {
      if (gt_best[g] > 0.0 && iou(r.anchors[i], entry.annotations[g].bbox) == gt_best[g]) {
        label[i] = 1;
        best_gt[i] = static_cast<int>(g);
      }
    }
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == 1) pos.push_back(i);
    if (label[i] == 0) neg.push_back(i);
  }
  shuffle(pos, sample_rng_);
  shuffle(neg, sample_rng_);
  const auto max_pos = static_cast<std::size_t>(config_.rpn_batch * config_.rpn_positive_fraction);
  if (pos.size() > max_pos) pos.resize(max_pos);
  const std::size_t want_neg = static_cast<std::size_t>(config_.rpn_batch) - pos.size();
  if (neg.size() > want_neg) neg.resize(want_neg);

  step.rpn_d_logits.assign(n, 0.0);
  step.rpn_d_deltas.assign(n, Deltas{0, 0, 0, 0});
  const double count = static_cast<double>(pos.size() + neg.size());
  if (count == 0) return;
  double loss = 0.0;
  for (std::size_t i : neg) {
    loss += bce_with_logit(r.logits[i], 0.0);
    step.rpn_d_logits[i] = sigmoid(r.logits[i]) * scale / count;
  }
  for (std::size_t i : pos) {
    loss += bce_with_logit(r.logits[i], 1.0);
    step.rpn_d_logits[i] = (sigmoid(r.logits[i]) - 1.0) * scale / count;
    const Deltas target = encode_deltas(r.anchors[i], entry.annotations[best_gt[i]].bbox);
    for (int k = 0; k < 4; ++k) {
      const double diff = r.deltas[i][k] - target[k];
      loss += smooth_l1(diff);
      step.rpn_d_deltas[i][k] = smooth_l1_grad(diff) * scale / count;
    }
  }
  step.rpn_loss = loss / count;
}

// Ground-truth boxes come first, then each object's matched proposal, then
// sampled positives and background up to roi_batch.
void Trainer::select_rois(ImageStep& step, const data::ManifestEntry& entry) {
  const Image& image = images_[&entry - manifest_.entries.data()];
  std::vector<Box> props = detector_.proposals(step.rpn, image.width, image.height, detector_.config().post_nms_train);
  std::vector<Box> gts;
  for (const auto& a : entry.annotations) gts.push_back(a.bbox);
  const std::vector<ProposalMatch> matches = match_positive_proposals(props, gts, config_.positive_iou);

  std::vector<Box> rois;
  step.assign.clear();
  step.gt_row.assign(gts.size(), -1);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    step.gt_row[g] = static_cast<int>(rois.size());
    rois.push_back(gts[g]);
    step.assign.push_back({entry.annotations[g].class_index + 1, static_cast<int>(g)});
  }
  std::vector<int> prop_row(props.size(), -1);
  auto assign_of = [&](std::size_t p) {
    double best = 0.0;
    int who = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(props[p], gts[g]);
      if (v > best) {
        best = v;
        who = static_cast<int>(g);
      }
    }
    if (best > config_.positive_iou) return RoiAssignment{entry.annotations[who].class_index + 1, who};
    return RoiAssignment{0, -1};
  };
  for (const ProposalMatch& m : matches) {
    if (!m.proposal || prop_row[*m.proposal] >= 0) continue;
    prop_row[*m.proposal] = static_cast<int>(rois.size());
    rois.push_back(props[*m.proposal]);
    step.assign.push_back(assign_of(*m.proposal));
  }
  std::vector<std::size_t> fg, bg;
  for (std::size_t p = 0; p < props.size(); ++p) {
    if (prop_row[p] >= 0) continue;
    (assign_of(p).label > 0 ? fg : bg).push_back(p);
  }
  shuffle(fg, sample_rng_);
  shuffle(bg, sample_rng_);
  const auto fg_cap = static_cast<std::size_t>(config_.roi_batch * config_.roi_positive_fraction);
  for (std::size_t p : fg) {
    if (rois.size() >= fg_cap) break;
    prop_row[p] = static_cast<int>(rois.size());
    rois.push_back(props[p]);
    step.assign.push_back(assign_of(p));
  }
  for (std::size_t p : bg) {
    if (rois.size() >= static_cast<std::size_t>(config_.roi_batch)) break;
    prop_row[p] = static_cast<int>(rois.size());
    rois.push_back(props[p]);
    step.assign.push_back({0, -1});
  }
  step.head = detector_.head(step.state.feat, std::move(rois));

  step.objects.clear();
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const auto& a = entry.annotations[g];
    ObjectRecord rec;
    rec.image_id = entry.image_id;
    rec.annotation_id = a.annotation_id;
    rec.class_index = a.class_index;
    rec.gt_box = a.bbox;
    if (matches[g].proposal) {
      const int row = prop_row[*matches[g].proposal];
      rec.matched_roi = step.head.hidden[row];
      rec.p_t = step.head.probs[row][a.class_index + 1];
    }
    step.objects.push_back(std::move(rec));
  }
}

ImageStep Trainer::forward_image(std::size_t entry_index) {
  ImageStep step;
  step.state = detector_.backbone(images_[entry_index]);
  step.rpn = detector_.rpn(step.state.feat);
  return step;
}

void Trainer::step_detector(const ParamSet& grad_in) {
  ParamSet& params = detector_.params();
  double norm2 = 0.0;
  for (const auto& t : grad_in.tensors)
    for (double g : t) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  const double scale = (config_.grad_clip > 0 && norm > config_.grad_clip) ? config_.grad_clip / norm : 1.0;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& p = params[t];
    auto& v = momentum_[t];
    const auto& g = grad_in[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = config_.momentum * v[i] + scale * g[i] + config_.weight_decay * p[i];
      p[i] -= config_.learning_rate * v[i];
    }
  }
}

bool finite_outputs(const ImageStep& step) {
  for (double v : step.rpn.logits)
    if (!std::isfinite(v)) return false;
  for (const Deltas& d : step.rpn.deltas)
    for (double v : d)
      if (!std::isfinite(v)) return false;
  for (const auto& row : step.head.logits)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  for (const Deltas& d : step.head.deltas)
    for (double v : d)
      if (!std::isfinite(v)) return false;
  return std::isfinite(step.rpn_loss);
}

void Trainer::checkpoint(int epoch) const {
  if (config_.out_dir.empty()) return;
  const std::filesystem::path dir = config_.out_dir / "ckpt" / ("epoch_" + std::to_string(epoch));
  std::filesystem::create_directories(dir);
  const Json prov{{"config_hash", config_.config_hash}, {"seed", config_.seed}, {"tool_version", kToolVersion}};
  Json det = detector_.to_json();
  det["provenance"] = prov;
  write_text(dir / "detector.json", det.dump() + "\n");
  Json ad = adapter_.to_json();
  ad["provenance"] = prov;
  write_text(dir / "adapter.json", ad.dump() + "\n");
  Json momentum = Json::object();
  for (std::size_t i = 0; i < kNumParamTensors; ++i) momentum[param_name(i)] = momentum_[i];
  write_json(dir / "rngstate.json", Json{{"schema", "rngstate/v1"},
                                         {"epoch", epoch},
                                         {"sample_rng_state", sample_rng_.state()},
                                         {"detector_momentum", std::move(momentum)},
                                         {"provenance", prov}});
}

TrainResult Trainer::run() {
  TrainResult result;
  result.used_weight_cache = used_cache_;
  const loss::ClipCeSchedule& sched = config_.schedule;
  const bool clipce = config_.loss_kind == loss::LossKind::kClipCe;
  std::string log_text;

  std::vector<std::size_t> order(manifest_.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= sched.total_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    const loss::Branch branch = loss::active_branch(epoch, sched);
    log.branch = clipce ? loss::branch_name(branch) : loss::loss_kind_name(config_.loss_kind);
    std::vector<ObjectLog> obj_log(objects_.size());
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto& entry = manifest_.entries[objects_[i].entry];
      const auto& a = entry.annotations[objects_[i].annotation];
      obj_log[i].image_id = entry.image_id;
      obj_log[i].annotation_id = a.annotation_id;
      obj_log[i].degradation = a.degradation;
      obj_log[i].w_ame = objects_[i].w_ame;
    }
    double active_sum = 0.0;
    std::size_t active_n = 0;
    std::size_t batches = 0;
    std::size_t adapter_batches = 0;

    shuffle(order, sample_rng_);
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const double img_scale = 1.0 / static_cast<double>(end - start);
      std::vector<ImageStep> steps;
      double rpn_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& entry = manifest_.entries[order[b]];
        ImageStep step = forward_image(order[b]);
        rpn_targets(step, entry, img_scale);
        select_rois(step, entry);
        rpn_loss += step.rpn_loss * img_scale;
        steps.push_back(std::move(step));
      }
      // Diverged parameters surface as non-finite logits before any loss is
      // formed; stop here so the loss functions never see NaN probabilities.
      for (const ImageStep& st : steps) {
        if (finite_outputs(st)) continue;
        checkpoint(epoch);
        fail(ErrorCode::kNumeric, "non-finite detector outputs at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches) + " (rpn loss " + std::to_string(rpn_loss) +
                                      "); checkpoint written");
      }

      // Adapter samples and fused weights for matched objects.
      std::vector<fame::AdapterSample> samples;
      std::vector<std::vector<std::optional<ame::WeightRecord>>> weights(steps.size());
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const std::size_t e = order[start + s];
        const auto& entry = manifest_.entries[e];
        weights[s].resize(steps[s].objects.size());
        for (std::size_t g = 0; g < steps[s].objects.size(); ++g) {
          const ObjectRecord& rec = steps[s].objects[g];
          const std::size_t oi = object_index_[e][g];
          const ObjectInfo& info = objects_[oi];
          ObjectLog& ol = obj_log[oi];
          ol.matched = rec.matched_roi.has_value();
          ol.p_t = rec.p_t ? *rec.p_t
                           : steps[s].head.probs[steps[s].gt_row[g]][info.class_index + 1];
          ol.w_offset.reset();
          ol.w_active.reset();
          if (!rec.matched_roi) continue;
          ame::WeightRecord w;
          w.image_id = entry.image_id;
          w.annotation_id = rec.annotation_id;
          w.w_ame = info.w_ame;
          if (clipce) {
            const auto ci = static_cast<std::size_t>(info.class_index);
            const std::vector<double> adapted = adapter_.adapt(info.visual.values(), *rec.matched_roi);
            // Double precision saturates the softmax once the similarity gap
            // passes ~37; keep the fused weight inside (0, 1).
            w.w_offset = std::clamp(fame::offset_weight(adapted, t_pos_[ci].values(), t_neg_[ci].values()),
                                    fame::kClampEpsilon, 1.0 - fame::kClampEpsilon);
            w.w_fame = fame::fame_weight(w.w_ame, *w.w_offset);
            samples.push_back(fame::AdapterSample{info.visual.values(), *rec.matched_roi, *rec.p_t,
                                                  t_pos_[ci].values(), t_neg_[ci].values()});
            ol.w_offset = w.w_offset;
            ol.w_active = branch == loss::Branch::kAme ? w.w_ame : *w.w_fame;
            active_sum += *ol.w_active;
            ++active_n;
          }
          weights[s][g] = w;
        }
      }

      // Classification terms over every ROI of the mini-batch.
      std::vector<loss::ProposalTerm> terms;
      std::vector<std::pair<std::size_t, std::size_t>> term_src;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        for (std::size_t r = 0; r < steps[s].assign.size(); ++r) {
          const RoiAssignment& as = steps[s].assign[r];
          loss::ProposalTerm t;
          t.out.probs = steps[s].head.probs[r];
          t.out.gt_index = static_cast<std::size_t>(as.label);
          if (clipce && as.object >= 0) t.weights = weights[s][as.object];
          terms.push_back(std::move(t));
          term_src.emplace_back(s, r);
        }
      }
      const double n_terms = static_cast<double>(terms.size());
      double cls_loss = 0.0;
      if (config_.loss_kind == loss::LossKind::kFocal) {
        for (const auto& t : terms) cls_loss += loss::focal_loss(t.out, config_.focal);
        cls_loss /= n_terms;
      } else {
        loss::BatchLoss bl = loss::batch_detection_class_loss(terms, epoch, sched);
        cls_loss = bl.loss;
        log.ame_terms += bl.ame_terms;
        log.fame_terms += bl.fame_terms;
      }

      ParamSet grad = detector_.params().zeros_like();
      double bbox_loss = 0.0;
      std::vector<std::vector<std::vector<double>>> d_logits(steps.size());
      std::vector<std::vector<Deltas>> d_deltas(steps.size());
      for (std::size_t s = 0; s < steps.size(); ++s) {
        d_logits[s].resize(steps[s].assign.size());
        d_deltas[s].assign(steps[s].assign.size(), Deltas{0, 0, 0, 0});
      }
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto [s, r] = term_src[i];
        const loss::ProposalTerm& t = terms[i];
        std::vector<double> g;
        if (config_.loss_kind == loss::LossKind::kFocal) {
          g = loss::focal_logit_gradient(t.out.probs, t.out.gt_index, config_.focal);
        } else {
          const double m = t.weights ? loss::clipce_multiplier(*t.weights, epoch, sched) : 1.0;
          g = loss::weighted_ce_logit_gradient(t.out.probs, t.out.gt_index, m);
        }
        for (double& x : g) x /= n_terms;
        d_logits[s][r] = std::move(g);
        const RoiAssignment& as = steps[s].assign[r];
        if (as.label > 0) {
          const auto& entry = manifest_.entries[order[start + s]];
          const Deltas target = encode_deltas(steps[s].head.rois[r], entry.annotations[as.object].bbox);
          for (int k = 0; k < 4; ++k) {
            const double diff = steps[s].head.deltas[r][k] - target[k];
            bbox_loss += smooth_l1(diff) / n_terms;
            d_deltas[s][r][k] = smooth_l1_grad(diff) / n_terms;
          }
        }
      }

      const double total = rpn_loss + bbox_loss + cls_loss;
      if (!std::isfinite(total)) {
        checkpoint(epoch);
        std::ostringstream msg;
        msg << "non-finite detector loss at epoch " << epoch << ", batch " << batches << " (rpn " << rpn_loss
            << ", bbox " << bbox_loss << ", cls " << cls_loss << "); checkpoint written";
        fail(ErrorCode::kNumeric, msg.str());
      }

      for (std::size_t s = 0; s < steps.size(); ++s) {
        const ImageStep& st = steps[s];
        Tensor3 d_feat(st.state.feat.c, st.state.feat.h, st.state.feat.w);
        detector_.head_backward(st.state.feat, st.head, d_logits[s], d_deltas[s], d_feat, grad);
        detector_.rpn_backward(st.state.feat, st.rpn, st.rpn_d_logits, st.rpn_d_deltas, d_feat, grad);
        detector_.backbone_backward(st.state, d_feat, grad);
      }
      step_detector(grad);

      if (clipce && !samples.empty()) {
        log.adapter_loss += fame::adapter_step(adapter_, samples, config_.soft_label);
        ++adapter_batches;
      }
      log.rpn_loss += rpn_loss;
      log.bbox_loss += bbox_loss;
      log.cls_loss += cls_loss;
      ++batches;
    }

    if (batches > 0) {
      log.rpn_loss /= batches;
      log.bbox_loss /= batches;
      log.cls_loss /= batches;
    }
    if (adapter_batches > 0) log.adapter_loss /= adapter_batches;
    log.total_loss = log.rpn_loss + log.bbox_loss + log.cls_loss + log.adapter_loss;
    log.mean_active_weight = active_n ? active_sum / active_n : 0.0;
    for (const ObjectLog& ol : obj_log) (ol.matched ? log.matched_objects : log.unmatched_objects)++;
    log.objects = std::move(obj_log);

    if (!config_.out_dir.empty()) {
      std::filesystem::create_directories(config_.out_dir);
      log_text += to_json(log, config_).dump() + "\n";
      write_text(config_.out_dir / "train_log.jsonl", log_text);
      if (config_.checkpoint_each_epoch || epoch == sched.total_epochs) checkpoint(epoch);
    }
    info("epoch " + std::to_string(epoch) + " [" + log.branch + "] total " + std::to_string(log.total_loss));
    result.epochs.push_back(std::move(log));
  }
  return result;
}

}  // namespace

void validate(const TrainConfig& c) {
  loss::validate(c.schedule);
  require(c.batch_size > 0, ErrorCode::kConfig, "batch_size must be positive");
  require(c.learning_rate >= 0 && std::isfinite(c.learning_rate), ErrorCode::kConfig,
          "learning rate must be finite and non-negative");
  require(c.momentum >= 0 && c.momentum < 1, ErrorCode::kConfig, "momentum must lie in [0, 1)");
  require(c.weight_decay >= 0, ErrorCode::kConfig, "weight_decay must be non-negative");
  require(c.rpn_batch > 0 && c.roi_batch > 0, ErrorCode::kConfig, "sampling batch sizes must be positive");
  require(c.rpn_positive_fraction > 0 && c.rpn_positive_fraction <= 1 && c.roi_positive_fraction > 0 &&
              c.roi_positive_fraction <= 1,
          ErrorCode::kConfig, "positive fractions must lie in (0, 1]");
  require(c.rpn_negative_iou <= c.rpn_positive_iou, ErrorCode::kConfig,
          "rpn negative IoU must not exceed the positive IoU");
  require(c.soft_label.theta > 0 && c.soft_label.theta < 1, ErrorCode::kConfig, "theta must lie in (0, 1)");
  require(c.focal.gamma >= 0, ErrorCode::kConfig, "gamma must be non-negative");
}

Json to_json(const EpochLog& log, const TrainConfig& config) {
  Json objects = Json::array();
  for (const ObjectLog& o : log.objects) {
    objects.push_back(Json{{"image_id", o.image_id},
                           {"annotation_id", o.annotation_id},
                           {"degradation", opt(o.degradation)},
                           {"matched", o.matched},
                           {"p_t", o.p_t},
                           {"w_ame", o.w_ame},
                           {"w_offset", opt(o.w_offset)},
                           {"w_active", opt(o.w_active)}});
  }
  return Json{{"schema", "train_log/v1"},
              {"epoch", log.epoch},
              {"branch", log.branch},
              {"loss",
               {{"rpn", log.rpn_loss},
                {"bbox", log.bbox_loss},
                {"cls", log.cls_loss},
                {"adapter", log.adapter_loss},
                {"total", log.total_loss}}},
              {"mean_active_weight", log.mean_active_weight},
              {"branch_counts", {{"ame", log.ame_terms}, {"fame", log.fame_terms}}},
              {"matched_objects", log.matched_objects},
              {"unmatched_objects", log.unmatched_objects},
              {"objects", std::move(objects)},
              {"config_hash", config.config_hash},
              {"seed", config.seed},
              {"tool_version", kToolVersion}};
}

EpochLog epoch_log_from_json(const Json& j) {
  try {
    require(j.value("schema", "") == "train_log/v1", ErrorCode::kParse, "not a train_log/v1 record");
    EpochLog log;
    log.epoch = j.at("epoch").get<int>();
    log.branch = j.at("branch").get<std::string>();
    const Json& l = j.at("loss");
    log.rpn_loss = l.at("rpn").get<double>();
    log.bbox_loss = l.at("bbox").get<double>();
    log.cls_loss = l.at("cls").get<double>();
    log.adapter_loss = l.at("adapter").get<double>();
    log.total_loss = l.at("total").get<double>();
    log.mean_active_weight = j.at("mean_active_weight").get<double>();
    log.ame_terms = j.at("branch_counts").at("ame").get<std::size_t>();
    log.fame_terms = j.at("branch_counts").at("fame").get<std::size_t>();
    log.matched_objects = j.value("matched_objects", std::size_t{0});
    log.unmatched_objects = j.value("unmatched_objects", std::size_t{0});
    for (const Json& o : j.at("objects")) {
      ObjectLog ol;
      ol.image_id = o.at("image_id").get<std::int64_t>();
      ol.annotation_id = o.at("annotation_id").get<std::int64_t>();
      ol.degradation = opt_from(o, "degradation");
      ol.matched = o.value("matched", false);
      ol.p_t = o.at("p_t").get<double>();
      ol.w_ame = o.at("w_ame").get<double>();
      ol.w_offset = opt_from(o, "w_offset");
      ol.w_active = opt_from(o, "w_active");
      log.objects.push_back(ol);
    }
    return log;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed training log record: ") + e.what());
  }
}

std::vector<EpochLog> read_train_log(const std::filesystem::path& path) {
  std::vector<EpochLog> out;
  for (const Json& j : read_jsonl(path)) out.push_back(epoch_log_from_json(j));
  return out;
}

ame::WeightCacheHeader expected_cache_header(const data::DatasetManifest& manifest,
                                             const embedding::EmbeddingProvider& provider,
                                             const std::string& template_pos, const std::string& template_neg) {
  ame::WeightCacheHeader h;
  h.backend_id = provider.descriptor().backend_id;
  h.dim = provider.dim();
  h.template_pos = template_pos;
  h.template_neg = template_neg;
  h.templates_hash = ame::templates_hash(template_pos, template_neg);
  h.manifest_hash = data::manifest_hash(manifest);
  return h;
}

TrainResult train(const data::DatasetManifest& manifest, TwoStageDetector& detector,
                  const embedding::EmbeddingProvider& provider, fame::Adapter& adapter, const ame::WeightCache* cache,
                  const TrainConfig& config) {
  validate(config);
  require(!manifest.entries.empty(), ErrorCode::kInput, "training manifest has no images");
  require(detector.num_classes() == static_cast<int>(manifest.class_names.size()), ErrorCode::kConfig,
          "detector class count does not match the dataset");
  const auto& ac = adapter.config();
  require(ac.output_dim == provider.dim() &&
              ac.input_dim == provider.dim() + static_cast<std::size_t>(detector.config().head_hidden),
          ErrorCode::kConfig, "adapter dimensions do not match the embedding and ROI feature sizes");
  Trainer trainer(manifest, detector, provider, adapter, cache, config);
  return trainer.run();
}

}  // namespace clipce::detect
