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

// Command-line front end. Everything goes through the C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clipce/clipce.h"

namespace {

const char* opt_c(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int report(clipce_status st) {
  if (st != CLIPCE_OK) std::fprintf(stderr, "error (%s): %s\n", clipce_status_name(st), clipce_last_error());
  return static_cast<int>(st);
}

// Owns a clipce_run built from --config plus command-line overrides.
class Run {
 public:
  ~Run() { clipce_run_destroy(run_); }

  clipce_status open(const std::string& config, const std::vector<std::pair<std::string, std::string>>& overrides) {
    clipce_status st = clipce_run_create(opt_c(config), &run_);
    for (const auto& [key, value] : overrides) {
      if (st != CLIPCE_OK) break;
      st = clipce_run_set(run_, key.c_str(), value.c_str());
    }
    return st;
  }

  const clipce_run* get() const { return run_; }

 private:
  clipce_run* run_ = nullptr;
};

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLIP-guided cross-entropy detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(clipce_version()));

  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool quiet = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--set", sets, "Override a config key, e.g. --set loss.alpha1=2");
    sub->add_flag("--quiet", quiet, "Suppress log output");
  };

  std::string manifest, out, cache, log, ckpt, beta, images_dir, depth_dir, annotations;
  std::size_t count = 200;
  std::optional<double> clamp_ratio;
  bool depth_invert = false;

  CLI::App* hazegen = app.add_subcommand("hazegen", "Synthesize hazy images from clear images and depth");
  common(hazegen);
  hazegen->add_option("--manifest", manifest, "Clear-image manifest (default: data.manifest)");
  hazegen->add_option("--out", out, "Output directory (default: <work_dir>/hazy)");
  hazegen->add_option("--beta", beta, "Scattering policy, fixed:<k> or uniform:<lo>-<hi>");
  hazegen->add_option("--clamp-ratio", clamp_ratio, "Largest allowed far/near depth ratio");
  hazegen->add_flag("--depth-invert", depth_invert, "Input maps are disparity (larger = nearer)");

  CLI::App* weights = app.add_subcommand("weights", "Precompute AME weights into a cache");
  common(weights);
  weights->add_option("--manifest", manifest, "Dataset manifest (default: data.manifest)");
  weights->add_option("--out", out, "Cache file (default: configured cache location)");

  CLI::App* train = app.add_subcommand("train", "Train the reference detector");
  common(train);
  train->add_option("--manifest", manifest, "Training manifest (default: data.manifest)");
  train->add_option("--cache", cache, "AME weight cache (default: configured cache location)");
  train->add_option("--out", out, "Output directory (default: <work_dir>/train)");

  CLI::App* evaluate = app.add_subcommand("eval", "Compute mAP@0.5 for a checkpoint");
  common(evaluate);
  evaluate->add_option("--ckpt", ckpt, "Checkpoint: epoch directory, training directory or detector file");
  evaluate->add_option("--manifest", manifest, "Evaluation manifest");
  evaluate->add_option("--out", out, "Report path (default: <work_dir>/eval/report.json)");

  CLI::App* analyze = app.add_subcommand("analyze-weights", "Join AME and focal weights with degradation");
  common(analyze);
  analyze->add_option("--cache", cache, "AME weight cache")->required();
  analyze->add_option("--log", log, "Training log (train_log.jsonl)")->required();
  analyze->add_option("--out", out, "CSV output path")->required();
  analyze->add_option("--manifest", manifest, "Manifest carrying the degradation proxy (default: the log's)");

  CLI::App* pipeline = app.add_subcommand("pipeline", "Run the configured stages");
  common(pipeline);

  CLI::App* ingest = app.add_subcommand("ingest", "Convert COCO annotations into a manifest");
  common(ingest);
  ingest->add_option("--annotations", annotations, "COCO annotation JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--images", images_dir, "Image root")->required();
  ingest->add_option("--depth", depth_dir, "Depth root (maps matched by filename stem)");
  ingest->add_option("--out", out, "Manifest output path")->required();

  CLI::App* shapes = app.add_subcommand("make-shapes", "Generate the synthetic shapes dataset");
  common(shapes);
  shapes->add_option("--out", out, "Output directory")->required();
  shapes->add_option("--images", count, "Number of images");

  CLI11_PARSE(app, argc, argv);
  clipce_set_quiet(quiet ? 1 : 0);

  std::vector<std::pair<std::string, std::string>> overrides;
  if (seed) overrides.emplace_back("seed", std::to_string(*seed));
  if (!beta.empty()) overrides.emplace_back("haze.beta", json_string(beta));
  if (clamp_ratio) overrides.emplace_back("haze.clamp_ratio", std::to_string(*clamp_ratio));
  if (depth_invert) overrides.emplace_back("haze.depth_invert", "true");
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", s.c_str());
      return static_cast<int>(CLIPCE_ERR_CONFIG);
    }
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  Run run;
  if (clipce_status st = run.open(config, overrides); st != CLIPCE_OK) return report(st);

  if (*hazegen) return report(clipce_hazegen(run.get(), opt_c(manifest), opt_c(out)));
  if (*weights) return report(clipce_weights(run.get(), opt_c(manifest), opt_c(out)));
  if (*train) return report(clipce_train(run.get(), opt_c(manifest), opt_c(cache), opt_c(out)));
  if (*evaluate) {
    double map50 = 0.0;
    const clipce_status st = clipce_eval(run.get(), opt_c(ckpt), opt_c(manifest), opt_c(out), &map50);
    if (st == CLIPCE_OK) std::printf("map50 %.6f\n", map50);
    return report(st);
  }
  if (*analyze) return report(clipce_analyze_weights(cache.c_str(), log.c_str(), opt_c(manifest), out.c_str()));
  if (*pipeline) {
    int ran = 0, skipped = 0;
    const clipce_status st = clipce_pipeline(run.get(), &ran, &skipped);
    if (st == CLIPCE_OK) std::printf("stages run %d, skipped %d\n", ran, skipped);
    return report(st);
  }
  if (*ingest) {
    return report(clipce_ingest_coco(annotations.c_str(), images_dir.c_str(), opt_c(depth_dir), out.c_str()));
  }
  if (*shapes) {
    std::uint64_t s = seed.value_or(0);
    return report(clipce_make_shapes(out.c_str(), count, s));
  }
  return 0;
}
