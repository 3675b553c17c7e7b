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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ame/weight_cache.hpp"
#include "app/config.hpp"
#include "data/manifest.hpp"
#include "detect/trainer.hpp"
#include "eval/eval.hpp"

namespace clipce::app {

// Stage entry points shared by the CLI verbs and the pipeline.
data::DatasetManifest run_hazegen(const RunConfig& config, const std::filesystem::path& manifest,
                                  const std::filesystem::path& out_dir);

// Writes the cache even when the run aborts (marked partial), then raises.
ame::PrecomputeReport run_weights(const RunConfig& config, const std::filesystem::path& manifest,
                                  const std::filesystem::path& out_path);

detect::TrainResult run_train(const RunConfig& config, const std::filesystem::path& manifest,
                              const std::optional<std::filesystem::path>& cache, const std::filesystem::path& out_dir);

// `checkpoint` is an epoch directory, a training output directory (latest
// epoch wins) or a detector file.
eval::EvalReport run_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& manifest, const std::filesystem::path& out_path);

// CSV plus <out>.meta.json with the rank-correlation summary.
eval::WeightReport run_analyze(const std::filesystem::path& cache, const std::filesystem::path& log,
                               const std::optional<std::filesystem::path>& manifest,
                               const std::filesystem::path& out_csv);

std::filesystem::path resolve_checkpoint(const std::filesystem::path& checkpoint);

// <work_dir>/weights.jsonl, or $CLIPCE_CACHE_DIR/weights-<manifest hash>.jsonl
// when the variable is set.
std::filesystem::path default_cache_path(const RunConfig& config, const data::DatasetManifest& manifest);

struct StageOutcome {
  std::string stage;
  bool skipped = false;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;
};

// Runs the configured stages in order. A stage whose stamp matches its
// inputs and whose outputs still hash to the recorded values is skipped.
PipelineResult run_pipeline(const RunConfig& config);

}  // namespace clipce::app
