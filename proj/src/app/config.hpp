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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "common/io.hpp"
#include "detect/detector.hpp"
#include "detect/trainer.hpp"
#include "eval/eval.hpp"
#include "haze/haze.hpp"

namespace clipce::app {

inline constexpr const char* kRunConfigSchema = "run_config/v1";

// Stage names in execution order.
inline const std::vector<std::string> kStageOrder{"synthesize", "weights", "train", "eval", "analyze"};

struct RunConfig {
  std::uint64_t seed = 0;
  std::vector<std::string> stages = kStageOrder;

  struct Data {
    std::string manifest;
    std::string work_dir = "work";
    std::string eval_manifest;  // empty: evaluate on the training manifest
  } data;

  struct Embeddings {
    std::string backend = "stub:0";
    std::size_t dim = 64;
    std::string template_pos = "a photo of a {cls}";
    std::string template_neg = "a photo without {cls}";
  } embeddings;

  struct Haze {
    std::string beta = "uniform:1-5";
    double clamp_ratio = 100.0;
    bool depth_invert = false;
    int dcp_patch = 15;
    double dcp_bright_fraction = 0.001;
  } haze;

  struct Loss {
    std::string kind = "clipce";
    std::string preset;  // hazycoco | rtts | exdark | trashcan; fills unset alphas
    double alpha1 = 0.5;
    double alpha2 = 1.0;
    double gamma = 2.0;
  } loss;

  struct Schedule {
    int pretrain_epochs = 15;
    int total_epochs = 20;
  } schedule;

  struct Fame {
    std::size_t hidden_dim = 512;
    double lr = 0.01;
    double theta = 0.5;
  } fame;

  struct DetectorSection {
    double lr = 0.01;
    int batch_size = 4;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double grad_clip = 10.0;
    detect::TwoStageConfig arch;
  } detector;

  struct Eval {
    double score_threshold = 0.05;
    double nms_iou = 0.5;
  } eval;

  // Directory relative paths resolve against (the config file's directory).
  std::filesystem::path base_dir;

  std::filesystem::path manifest_path() const;
  std::filesystem::path work_dir() const;
  std::optional<std::filesystem::path> eval_manifest_path() const;
};

// Alpha pair for a named dataset preset.
std::pair<double, double> alpha_preset(const std::string& name);

// Strict parse: unknown keys and wrong types are config errors naming the
// offending key path.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& config);

// Sets one dotted key ("loss.alpha1", "seed") from a JSON literal and
// re-validates.
void override_key(RunConfig& config, const std::string& dotted_key, const Json& value);

void validate(const RunConfig& config);

// SHA-256 over the canonical JSON form.
std::string config_hash(const RunConfig& config);

detect::TrainConfig train_config(const RunConfig& config);
haze::SynthesisOptions synthesis_options(const RunConfig& config);
eval::EvalOptions eval_options(const RunConfig& config);

}  // namespace clipce::app
