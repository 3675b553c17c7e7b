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

#include "app/workflow.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/log.hpp"
#include "common/rng.hpp"
#include "embedding/embedding.hpp"
#include "fame/adapter.hpp"
#include "haze/haze.hpp"

namespace clipce::app {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDetectorStream = 1;
constexpr std::uint64_t kAdapterStream = 2;

Json provenance(const RunConfig& config) {
  return Json{{"config_hash", config_hash(config)}, {"seed", config.seed}, {"tool_version", kToolVersion}};
}

}  // namespace

data::DatasetManifest run_hazegen(const RunConfig& config, const fs::path& manifest, const fs::path& out_dir) {
  const data::DatasetManifest in = data::load_manifest(manifest);
  haze::SynthesisReport report;
  data::DatasetManifest out = haze::synthesize_dataset(in, out_dir, synthesis_options(config), &report);
  for (const std::string& s : report.skipped) warn(s);
  for (const std::string& e : report.errors) warn(e);
  require(report.errors.empty(), ErrorCode::kIo,
          std::to_string(report.errors.size()) + " images failed during haze synthesis");
  return out;
}

fs::path default_cache_path(const RunConfig& config, const data::DatasetManifest& manifest) {
  if (const char* dir = std::getenv("CLIPCE_CACHE_DIR"); dir && *dir) {
    return fs::path(dir) / ("weights-" + data::manifest_hash(manifest).substr(0, 16) + ".jsonl");
  }
  return config.work_dir() / "weights.jsonl";
}

ame::PrecomputeReport run_weights(const RunConfig& config, const fs::path& manifest, const fs::path& out_path) {
  const data::DatasetManifest m = data::load_manifest(manifest);
  auto provider = embedding::make_provider(config.embeddings.backend, config.embeddings.dim);
  ame::PrecomputeReport report;
  ame::WeightCache cache =
      ame::precompute_ame_weights(m, *provider, config.embeddings.template_pos, config.embeddings.template_neg, &report);
  cache.header.config_hash = config_hash(config);
  cache.header.seed = config.seed;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  ame::write_weight_cache(out_path, cache);
  if (report.aborted) fail(ErrorCode::kProvider, "weight precomputation stopped: " + report.abort_reason);
  return report;
}

detect::TrainResult run_train(const RunConfig& config, const fs::path& manifest, const std::optional<fs::path>& cache,
                              const fs::path& out_dir) {
  const data::DatasetManifest m = data::load_manifest(manifest);
  auto provider = embedding::make_provider(config.embeddings.backend, config.embeddings.dim);
  detect::TwoStageDetector detector(config.detector.arch, m.class_names, mix_seed(config.seed, kDetectorStream));
  fame::AdapterConfig ac{provider->dim() + static_cast<std::size_t>(config.detector.arch.head_hidden),
                         config.fame.hidden_dim, provider->dim(), config.fame.lr};
  fame::Adapter adapter = fame::Adapter::random(ac, mix_seed(config.seed, kAdapterStream));

  std::optional<ame::WeightCache> weights;
  if (cache && fs::exists(*cache)) {
    try {
      weights = ame::read_weight_cache(*cache);
    } catch (const Error& e) {
      warn(std::string("ignoring unreadable weight cache: ") + e.what());
    }
  }
  detect::TrainConfig tc = train_config(config);
  tc.out_dir = out_dir;
  fs::create_directories(out_dir);
  Json resolved = to_json(config);
  resolved["provenance"] = provenance(config);
  write_json(out_dir / "config.json", resolved);
  return detect::train(m, detector, *provider, adapter, weights ? &*weights : nullptr, tc);
}

fs::path resolve_checkpoint(const fs::path& checkpoint) {
  if (fs::is_regular_file(checkpoint)) return checkpoint;
  if (fs::exists(checkpoint / "detector.json")) return checkpoint / "detector.json";
  const fs::path ckpt = fs::exists(checkpoint / "ckpt") ? checkpoint / "ckpt" : checkpoint;
  int best = -1;
  if (fs::is_directory(ckpt)) {
    for (const auto& d : fs::directory_iterator(ckpt)) {
      const std::string name = d.path().filename().string();
      if (name.rfind("epoch_", 0) != 0 || !fs::exists(d.path() / "detector.json")) continue;
      try {
        best = std::max(best, std::stoi(name.substr(6)));
      } catch (const std::exception&) {
      }
    }
  }
  require(best >= 0, ErrorCode::kIo, "no detector checkpoint under " + checkpoint.string());
  return ckpt / ("epoch_" + std::to_string(best)) / "detector.json";
}

eval::EvalReport run_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& manifest,
                          const fs::path& out_path) {
  const fs::path det_file = resolve_checkpoint(checkpoint);
  const detect::TwoStageDetector detector = detect::TwoStageDetector::load(det_file);
  const data::DatasetManifest m = data::load_manifest(manifest);
  require(detector.class_names() == m.class_names, ErrorCode::kInput,
          "checkpoint classes do not match the evaluation manifest");
  const eval::EvalOptions opts = eval_options(config);
  eval::EvalReport report = eval::evaluate(detector, m, opts);
  Json j = eval::to_json(report);
  j["iou_threshold"] = opts.iou_threshold;
  j["score_threshold"] = opts.score_threshold;
  j["nms_iou"] = opts.nms_iou;
  j["manifest_hash"] = data::manifest_hash(m);
  j["checkpoint"] = fs::absolute(det_file).lexically_normal().string();
  j["checkpoint_sha256"] = sha256_file(det_file);
  j["provenance"] = provenance(config);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_json(out_path, j);
  return report;
}

eval::WeightReport run_analyze(const fs::path& cache, const fs::path& log, const std::optional<fs::path>& manifest,
                               const fs::path& out_csv) {
  const ame::WeightCache c = ame::read_weight_cache(cache);
  std::vector<detect::EpochLog> epochs;
  if (fs::exists(log)) {
    epochs = detect::read_train_log(log);
  } else {
    warn("training log " + log.string() + " not found; no p_t available");
  }
  std::optional<data::DatasetManifest> m;
  if (manifest) m = data::load_manifest(*manifest);
  eval::WeightReport report = eval::weight_analysis(c, epochs, m ? &*m : nullptr);
  if (report.skipped > 0) warn(std::to_string(report.skipped) + " objects had no join partner and were skipped");
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  write_text(out_csv, eval::to_csv(report));
  Json meta = eval::summary_json(report);
  meta["cache_sha256"] = sha256_file(cache);
  meta["provenance"] = {{"config_hash", c.header.config_hash}, {"seed", c.header.seed}, {"tool_version", kToolVersion}};
  write_json(fs::path(out_csv.string() + ".meta.json"), meta);
  return report;
}

namespace {

struct Stamp {
  std::string input_key;
  std::map<std::string, std::string> outputs;  // path -> sha256
};

std::string input_key(const std::string& stage, const RunConfig& config, const std::vector<fs::path>& inputs) {
  std::string s = stage + "\n" + config_hash(config) + "\n";
  for (const fs::path& p : inputs) {
    s += p.string() + "\n";
    s += fs::exists(p) ? sha256_file(p) : std::string("-");
    s += "\n";
  }
  return sha256_hex(s);
}

bool stamp_matches(const fs::path& stamp_file, const std::string& key) {
  if (!fs::exists(stamp_file)) return false;
  try {
    const Json j = read_json(stamp_file);
    if (j.value("input_key", "") != key) return false;
    for (const auto& [path, sha] : j.at("outputs").items()) {
      if (!fs::exists(path) || sha256_file(path) != sha.get<std::string>()) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void write_stamp(const fs::path& stamp_file, const std::string& stage, const std::string& key,
                 const std::vector<fs::path>& outputs, const RunConfig& config) {
  Json out = Json::object();
  for (const fs::path& p : outputs) out[fs::absolute(p).lexically_normal().string()] = sha256_file(p);
  fs::create_directories(stamp_file.parent_path());
  write_json(stamp_file, Json{{"schema", "stage_stamp/v1"},
                              {"stage", stage},
                              {"input_key", key},
                              {"outputs", std::move(out)},
                              {"provenance", provenance(config)}});
}

std::vector<fs::path> manifest_files(const fs::path& manifest_file) {
  std::vector<fs::path> files{manifest_file};
  const data::DatasetManifest m = data::load_manifest(manifest_file);
  for (const auto& e : m.entries) files.push_back(m.image_file(e));
  return files;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
  validate(config);
  PipelineResult result;
  const fs::path work = fs::absolute(config.work_dir()).lexically_normal();
  fs::create_directories(work);
  const fs::path stamps = work / "stamps";
  auto wants = [&](const std::string& s) {
    return std::find(config.stages.begin(), config.stages.end(), s) != config.stages.end();
  };

  const fs::path hazy_dir = work / "hazy";
  const fs::path train_dir = work / "train";
  const fs::path report_path = work / "eval" / "report.json";
  const fs::path csv_path = work / "analysis" / "weights.csv";
  const fs::path source_manifest = config.manifest_path();
  const fs::path manifest = wants("synthesize") ? hazy_dir / "manifest.json" : source_manifest;

  auto run_stage = [&](const std::string& stage, const std::vector<fs::path>& inputs, auto&& body) {
    const std::string key = input_key(stage, config, inputs);
    const fs::path stamp = stamps / (stage + ".json");
    if (stamp_matches(stamp, key)) {
      info("stage " + stage + ": up to date");
      result.stages.push_back({stage, true});
      return;
    }
    info("stage " + stage + ": running");
    try {
      const std::vector<fs::path> outputs = body();
      write_stamp(stamp, stage, key, outputs, config);
    } catch (const Error& e) {
      fail(e.code(), "stage " + stage + " failed: " + e.what());
    }
    result.stages.push_back({stage, false});
  };

  auto need = [](const fs::path& p, const std::string& what) {
    require(fs::exists(p), ErrorCode::kState, what + " not found at " + p.string());
  };

  if (wants("synthesize")) {
    need(source_manifest, "input manifest");
    run_stage("synthesize", {source_manifest}, [&] {
      run_hazegen(config, source_manifest, hazy_dir);
      std::vector<fs::path> out = manifest_files(manifest);
      out.push_back(hazy_dir / "provenance.jsonl");
      out.push_back(hazy_dir / "annotations.json");
      return out;
    });
  }

  auto cache_path = [&] {
    need(manifest, "manifest");
    return default_cache_path(config, data::load_manifest(manifest));
  };

  if (wants("weights")) {
    const fs::path cache = cache_path();
    run_stage("weights", {manifest}, [&] {
      run_weights(config, manifest, cache);
      return std::vector<fs::path>{cache};
    });
  }

  if (wants("train")) {
    const fs::path cache = cache_path();
    run_stage("train", {manifest, cache}, [&] {
      run_train(config, manifest, cache, train_dir);
      const fs::path last = train_dir / "ckpt" / ("epoch_" + std::to_string(config.schedule.total_epochs));
      return std::vector<fs::path>{train_dir / "train_log.jsonl", last / "detector.json", last / "adapter.json"};
    });
  }

  if (wants("eval")) {
    const fs::path eval_manifest = config.eval_manifest_path().value_or(manifest);
    need(eval_manifest, "evaluation manifest");
    const fs::path ckpt = resolve_checkpoint(train_dir);
    run_stage("eval", {eval_manifest, ckpt}, [&] {
      run_eval(config, ckpt, eval_manifest, report_path);
      return std::vector<fs::path>{report_path};
    });
  }

  if (wants("analyze")) {
    const fs::path cache = cache_path();
    const fs::path log = train_dir / "train_log.jsonl";
    need(cache, "weight cache");
    need(log, "training log");
    run_stage("analyze", {cache, log, manifest}, [&] {
      run_analyze(cache, log, manifest, csv_path);
      return std::vector<fs::path>{csv_path, fs::path(csv_path.string() + ".meta.json")};
    });
  }
  return result;
}

}  // namespace clipce::app
