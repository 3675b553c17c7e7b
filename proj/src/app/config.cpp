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

#include "app/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "loss/loss.hpp"

namespace clipce::app {

namespace {

// Reads the keys of one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorCode::kConfig, where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      fail(ErrorCode::kConfig, "config key " + join(key) + " has the wrong type");
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const Json kEmpty = Json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, join(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      require(seen_.count(key) > 0, ErrorCode::kConfig, "unknown config key " + join(key));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "config key " + path_; }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::filesystem::path RunConfig::manifest_path() const { return resolve_path(base_dir, data.manifest); }
std::filesystem::path RunConfig::work_dir() const { return resolve_path(base_dir, data.work_dir); }
std::optional<std::filesystem::path> RunConfig::eval_manifest_path() const {
  if (data.eval_manifest.empty()) return std::nullopt;
  return resolve_path(base_dir, data.eval_manifest);
}

std::pair<double, double> alpha_preset(const std::string& name) {
  if (name == "hazycoco") return {0.5, 1.0};
  if (name == "rtts") return {2.0, 2.0};
  if (name == "exdark") return {1.0, 1.0};
  if (name == "trashcan") return {0.5, 0.5};
  fail(ErrorCode::kConfig, "unknown loss preset '" + name + "' (hazycoco, rtts, exdark, trashcan)");
}

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  Section root(j, "");
  std::string schema = kRunConfigSchema;
  root.get("schema", schema);
  require(schema == kRunConfigSchema, ErrorCode::kConfig, "unsupported config schema '" + schema + "'");
  root.get("seed", c.seed);
  root.get("stages", c.stages);

  Section data = root.sub("data");
  data.get("manifest", c.data.manifest);
  data.get("work_dir", c.data.work_dir);
  data.get("eval_manifest", c.data.eval_manifest);
  data.finish();

  Section emb = root.sub("embeddings");
  emb.get("backend", c.embeddings.backend);
  emb.get("dim", c.embeddings.dim);
  emb.get("template_pos", c.embeddings.template_pos);
  emb.get("template_neg", c.embeddings.template_neg);
  emb.finish();

  Section hz = root.sub("haze");
  hz.get("beta", c.haze.beta);
  hz.get("clamp_ratio", c.haze.clamp_ratio);
  hz.get("depth_invert", c.haze.depth_invert);
  hz.get("dcp_patch", c.haze.dcp_patch);
  hz.get("dcp_bright_fraction", c.haze.dcp_bright_fraction);
  hz.finish();

  Section ls = root.sub("loss");
  ls.get("kind", c.loss.kind);
  ls.get("preset", c.loss.preset);
  const bool has_a1 = ls.has("alpha1");
  const bool has_a2 = ls.has("alpha2");
  ls.get("alpha1", c.loss.alpha1);
  ls.get("alpha2", c.loss.alpha2);
  ls.get("gamma", c.loss.gamma);
  ls.finish();
  if (!c.loss.preset.empty()) {
    const auto [a1, a2] = alpha_preset(c.loss.preset);
    require((!has_a1 || c.loss.alpha1 == a1) && (!has_a2 || c.loss.alpha2 == a2), ErrorCode::kConfig,
            "loss.alpha1/alpha2 conflict with loss.preset '" + c.loss.preset + "'");
    c.loss.alpha1 = a1;
    c.loss.alpha2 = a2;
  }

  Section sc = root.sub("schedule");
  sc.get("pretrain_epochs", c.schedule.pretrain_epochs);
  sc.get("total_epochs", c.schedule.total_epochs);
  sc.finish();

  Section fm = root.sub("fame");
  fm.get("hidden_dim", c.fame.hidden_dim);
  fm.get("lr", c.fame.lr);
  fm.get("theta", c.fame.theta);
  fm.finish();

  Section det = root.sub("detector");
  det.get("lr", c.detector.lr);
  det.get("batch_size", c.detector.batch_size);
  det.get("momentum", c.detector.momentum);
  det.get("weight_decay", c.detector.weight_decay);
  det.get("grad_clip", c.detector.grad_clip);
  {
    Section arch = det.sub("arch");
    auto& a = c.detector.arch;
    arch.get("conv1_channels", a.conv1_channels);
    arch.get("conv2_channels", a.conv2_channels);
    arch.get("anchor_sizes", a.anchor_sizes);
    arch.get("roi_grid", a.roi_grid);
    arch.get("roi_samples", a.roi_samples);
    arch.get("head_hidden", a.head_hidden);
    arch.get("pre_nms_top", a.pre_nms_top);
    arch.get("rpn_nms_iou", a.rpn_nms_iou);
    arch.get("post_nms_train", a.post_nms_train);
    arch.get("post_nms_test", a.post_nms_test);
    arch.finish();
  }
  det.finish();

  Section ev = root.sub("eval");
  ev.get("score_threshold", c.eval.score_threshold);
  ev.get("nms_iou", c.eval.nms_iou);
  ev.finish();

  root.finish();
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    fail(e.code() == ErrorCode::kParse ? ErrorCode::kConfig : e.code(), e.what());
  }
  return run_config_from_json(j, std::filesystem::absolute(path).parent_path());
}

Json to_json(const RunConfig& c) {
  const auto& a = c.detector.arch;
  return Json{
      {"schema", kRunConfigSchema},
      {"seed", c.seed},
      {"stages", c.stages},
      {"data", {{"manifest", c.data.manifest}, {"work_dir", c.data.work_dir}, {"eval_manifest", c.data.eval_manifest}}},
      {"embeddings",
       {{"backend", c.embeddings.backend},
        {"dim", c.embeddings.dim},
        {"template_pos", c.embeddings.template_pos},
        {"template_neg", c.embeddings.template_neg}}},
      {"haze",
       {{"beta", c.haze.beta},
        {"clamp_ratio", c.haze.clamp_ratio},
        {"depth_invert", c.haze.depth_invert},
        {"dcp_patch", c.haze.dcp_patch},
        {"dcp_bright_fraction", c.haze.dcp_bright_fraction}}},
      {"loss",
       {{"kind", c.loss.kind},
        {"preset", c.loss.preset},
        {"alpha1", c.loss.alpha1},
        {"alpha2", c.loss.alpha2},
        {"gamma", c.loss.gamma}}},
      {"schedule", {{"pretrain_epochs", c.schedule.pretrain_epochs}, {"total_epochs", c.schedule.total_epochs}}},
      {"fame", {{"hidden_dim", c.fame.hidden_dim}, {"lr", c.fame.lr}, {"theta", c.fame.theta}}},
      {"detector",
       {{"lr", c.detector.lr},
        {"batch_size", c.detector.batch_size},
        {"momentum", c.detector.momentum},
        {"weight_decay", c.detector.weight_decay},
        {"grad_clip", c.detector.grad_clip},
        {"arch", a.to_json()}}},
      {"eval", {{"score_threshold", c.eval.score_threshold}, {"nms_iou", c.eval.nms_iou}}},
  };
}

void override_key(RunConfig& config, const std::string& dotted_key, const Json& value) {
  Json j = to_json(config);
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!part.empty() && node->is_object() && node->contains(part), ErrorCode::kConfig,
            "unknown config key " + dotted_key);
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
  // An explicit alpha drops the preset so the two cannot disagree.
  if (dotted_key == "loss.alpha1" || dotted_key == "loss.alpha2") j["loss"]["preset"] = "";
  config = run_config_from_json(j, config.base_dir);
}

void validate(const RunConfig& c) {
  for (const std::string& s : c.stages) {
    require(std::find(kStageOrder.begin(), kStageOrder.end(), s) != kStageOrder.end(), ErrorCode::kConfig,
            "unknown stage '" + s + "'");
  }
  require(c.embeddings.dim > 0, ErrorCode::kConfig, "embeddings.dim must be positive");
  require(c.embeddings.backend == "real" || c.embeddings.backend.rfind("stub:", 0) == 0, ErrorCode::kConfig,
          "embeddings.backend must be 'real' or 'stub:<seed>'");
  haze::BetaPolicy::parse(c.haze.beta);
  require(c.haze.clamp_ratio >= 1.0, ErrorCode::kConfig, "haze.clamp_ratio must be at least 1");
  require(c.haze.dcp_patch >= 1, ErrorCode::kConfig, "haze.dcp_patch must be positive");
  require(c.haze.dcp_bright_fraction > 0 && c.haze.dcp_bright_fraction <= 1, ErrorCode::kConfig,
          "haze.dcp_bright_fraction must lie in (0, 1]");
  try {
    loss::parse_loss_kind(c.loss.kind);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  require(std::isfinite(c.loss.alpha1) && std::isfinite(c.loss.alpha2), ErrorCode::kConfig,
          "loss alphas must be finite");
  require(c.fame.hidden_dim > 0, ErrorCode::kConfig, "fame.hidden_dim must be positive");
  require(c.fame.lr >= 0, ErrorCode::kConfig, "fame.lr must be non-negative");
  require(c.eval.score_threshold >= 0 && c.eval.score_threshold <= 1, ErrorCode::kConfig,
          "eval.score_threshold must lie in [0, 1]");
  require(c.eval.nms_iou > 0 && c.eval.nms_iou <= 1, ErrorCode::kConfig, "eval.nms_iou must lie in (0, 1]");
  detect::TwoStageConfig::from_json(c.detector.arch.to_json());
  try {
    detect::validate(train_config(c));
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
}

std::string config_hash(const RunConfig& config) { return sha256_hex(to_json(config).dump()); }

detect::TrainConfig train_config(const RunConfig& c) {
  detect::TrainConfig t;
  t.loss_kind = loss::parse_loss_kind(c.loss.kind);
  t.schedule = loss::ClipCeSchedule{c.loss.alpha1, c.loss.alpha2, c.schedule.pretrain_epochs,
                                    c.schedule.total_epochs};
  t.focal.gamma = c.loss.gamma;
  t.soft_label.theta = c.fame.theta;
  t.batch_size = c.detector.batch_size;
  t.learning_rate = c.detector.lr;
  t.momentum = c.detector.momentum;
  t.weight_decay = c.detector.weight_decay;
  t.grad_clip = c.detector.grad_clip;
  t.template_pos = c.embeddings.template_pos;
  t.template_neg = c.embeddings.template_neg;
  t.seed = c.seed;
  t.config_hash = config_hash(c);
  return t;
}

haze::SynthesisOptions synthesis_options(const RunConfig& c) {
  haze::SynthesisOptions o;
  o.beta = haze::BetaPolicy::parse(c.haze.beta);
  o.clamp_ratio = c.haze.clamp_ratio;
  o.dcp.patch_size = c.haze.dcp_patch;
  o.dcp.bright_fraction = c.haze.dcp_bright_fraction;
  o.seed = c.seed;
  o.depth_invert = c.haze.depth_invert;
  o.config_hash = config_hash(c);
  return o;
}

eval::EvalOptions eval_options(const RunConfig& c) {
  return eval::EvalOptions{c.eval.score_threshold, c.eval.nms_iou, eval::kDefaultIouThreshold};
}

}  // namespace clipce::app
