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

#include "clipce/clipce.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "ame/ame.hpp"
#include "app/config.hpp"
#include "app/workflow.hpp"
#include "common/error.hpp"
#include "common/log.hpp"
#include "data/manifest.hpp"
#include "data/shapes.hpp"
#include "embedding/embedding.hpp"
#include "fame/adapter.hpp"
#include "haze/haze.hpp"
#include "loss/loss.hpp"

struct clipce_provider {
  std::unique_ptr<clipce::embedding::EmbeddingProvider> impl;
};

struct clipce_adapter {
  clipce::fame::Adapter impl;
};

struct clipce_run {
  clipce::app::RunConfig config;
};

namespace {

using namespace clipce;

thread_local std::string g_last_error;

clipce_status to_status(ErrorCode code) { return static_cast<clipce_status>(static_cast<int>(code)); }

template <typename F>
clipce_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CLIPCE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CLIPCE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CLIPCE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CLIPCE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  require(p != nullptr, ErrorCode::kInput, std::string(name) + " must not be null");
}

loss::ClipCeSchedule schedule_of(const clipce_schedule* s) {
  need(s, "schedule");
  return loss::ClipCeSchedule{s->alpha1, s->alpha2, s->pretrain_epochs, s->total_epochs};
}

loss::ClassificationOutput output_of(const double* probs, size_t k, size_t gt) {
  need(probs, "probs");
  require(gt < k, ErrorCode::kInput, "gt_index out of range");
  return loss::ClassificationOutput{std::vector<double>(probs, probs + k), gt};
}

haze::Rgb rgb_of(const double* a) {
  need(a, "atmospheric_light");
  return haze::Rgb{a[0], a[1], a[2]};
}

Image image_of(const double* px, size_t n) {
  need(px, "image");
  Image img;
  img.width = static_cast<int>(n);
  img.height = 1;
  img.channels = 3;
  img.data.assign(px, px + 3 * n);
  return img;
}

Map2D map_of(const double* v, size_t n) {
  need(v, "map");
  Map2D m;
  m.width = static_cast<int>(n);
  m.height = 1;
  m.values.assign(v, v + n);
  return m;
}

std::filesystem::path path_or(const char* p, const std::filesystem::path& fallback) {
  return p ? std::filesystem::path(p) : fallback;
}

std::filesystem::path manifest_or(const clipce_run* run, const char* manifest) {
  if (manifest) return manifest;
  require(!run->config.data.manifest.empty(), ErrorCode::kConfig, "no manifest given and data.manifest is unset");
  return run->config.manifest_path();
}

}  // namespace

extern "C" {

const char* clipce_version(void) { return kToolVersion; }

const char* clipce_status_name(clipce_status status) {
  if (status == CLIPCE_OK) return "ok";
  if (status < CLIPCE_ERR_INPUT || status > CLIPCE_ERR_INTERNAL) return "unknown";
  return error_code_name(static_cast<ErrorCode>(status));
}

const char* clipce_last_error(void) { return g_last_error.c_str(); }

void clipce_set_quiet(int quiet) { set_log_quiet(quiet != 0); }

clipce_schedule clipce_default_schedule(void) {
  const loss::ClipCeSchedule s;
  return clipce_schedule{s.alpha1, s.alpha2, s.pretrain_epochs, s.total_epochs};
}

clipce_status clipce_similarity(const double* a, const double* b, size_t n, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = ame::similarity(std::span<const double>(a, n), std::span<const double>(b, n));
  });
}

clipce_status clipce_ame_weight(double sim_pos, double sim_neg, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ame::ame_weight(ame::SimilarityPair{sim_pos, sim_neg});
  });
}

clipce_status clipce_focal_weight(double p_t, double gamma, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ame::focal_weight(p_t, ame::FocalParams{gamma});
  });
}

clipce_status clipce_offset_weight(const double* adapted, const double* t_pos, const double* t_neg, size_t n,
                                   double* out) {
  return guarded([&] {
    need(adapted, "adapted");
    need(t_pos, "t_pos");
    need(t_neg, "t_neg");
    need(out, "out");
    *out = fame::offset_weight(std::span<const double>(adapted, n), std::span<const double>(t_pos, n),
                               std::span<const double>(t_neg, n));
  });
}

clipce_status clipce_soft_label(double p_t, double theta, int* out) {
  return guarded([&] {
    need(out, "out");
    *out = fame::soft_label(p_t, fame::SoftLabelParams{theta});
  });
}

clipce_status clipce_adapter_loss(int u, double w_offset, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = fame::adapter_loss(u, w_offset);
  });
}

clipce_status clipce_fame_weight(double w_ame, double w_offset, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = fame::fame_weight(w_ame, w_offset);
  });
}

clipce_status clipce_ce_loss(const double* probs, size_t k, size_t gt_index, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = loss::ce_loss(output_of(probs, k, gt_index));
  });
}

clipce_status clipce_focal_loss(const double* probs, size_t k, size_t gt_index, double gamma, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = loss::focal_loss(output_of(probs, k, gt_index), ame::FocalParams{gamma});
  });
}

clipce_status clipce_clipce_loss(const double* probs, size_t k, size_t gt_index, double w_ame, const double* w_fame,
                                 int epoch, const clipce_schedule* schedule, double* out) {
  return guarded([&] {
    need(out, "out");
    ame::WeightRecord w;
    w.w_ame = w_ame;
    if (w_fame) w.w_fame = *w_fame;
    *out = loss::clipce_loss(output_of(probs, k, gt_index), w, epoch, schedule_of(schedule));
  });
}

clipce_status clipce_active_branch(int epoch, const clipce_schedule* schedule, int* is_fame) {
  return guarded([&] {
    need(is_fame, "is_fame");
    *is_fame = loss::active_branch(epoch, schedule_of(schedule)) == loss::Branch::kFame ? 1 : 0;
  });
}

clipce_status clipce_transmission(const double* depth, size_t n, double beta, double* out) {
  return guarded([&] {
    need(out, "out");
    const Map2D t = haze::transmission(map_of(depth, n), beta);
    std::memcpy(out, t.values.data(), n * sizeof(double));
  });
}

clipce_status clipce_compose_haze(const double* clear, const double* trans, size_t n,
                                  const double atmospheric_light[3], double* out) {
  return guarded([&] {
    need(out, "out");
    const Image img = haze::compose_haze(image_of(clear, n), map_of(trans, n), rgb_of(atmospheric_light));
    std::memcpy(out, img.data.data(), 3 * n * sizeof(double));
  });
}

clipce_status clipce_recover_clear(const double* hazy, const double* trans, size_t n,
                                   const double atmospheric_light[3], double* out) {
  return guarded([&] {
    need(out, "out");
    const Image img = haze::recover_clear(image_of(hazy, n), map_of(trans, n), rgb_of(atmospheric_light));
    std::memcpy(out, img.data.data(), 3 * n * sizeof(double));
  });
}

clipce_status clipce_provider_create(const char* backend, size_t dim, clipce_provider** out) {
  return guarded([&] {
    need(backend, "backend");
    need(out, "out");
    *out = nullptr;
    auto impl = embedding::make_provider(backend, dim);
    *out = new clipce_provider{std::move(impl)};
  });
}

void clipce_provider_destroy(clipce_provider* provider) { delete provider; }

size_t clipce_provider_dim(const clipce_provider* provider) { return provider ? provider->impl->dim() : 0; }

clipce_status clipce_provider_encode_text(const clipce_provider* provider, const char* text, double* out, size_t n) {
  return guarded([&] {
    need(provider, "provider");
    need(text, "text");
    need(out, "out");
    require(n == provider->impl->dim(), ErrorCode::kInput, "output buffer size does not match the embedding dim");
    const embedding::Embedding e = provider->impl->encode_text(text);
    std::memcpy(out, e.values().data(), n * sizeof(double));
  });
}

clipce_status clipce_adapter_create(size_t input_dim, size_t hidden_dim, size_t output_dim, double learning_rate,
                                    uint64_t seed, clipce_adapter** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    fame::AdapterConfig cfg{input_dim, hidden_dim, output_dim, learning_rate};
    *out = new clipce_adapter{fame::Adapter::random(cfg, seed)};
  });
}

clipce_status clipce_adapter_load(const char* path, clipce_adapter** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new clipce_adapter{fame::Adapter::load(path)};
  });
}

clipce_status clipce_adapter_save(const clipce_adapter* adapter, const char* path) {
  return guarded([&] {
    need(adapter, "adapter");
    need(path, "path");
    adapter->impl.save(path);
  });
}

void clipce_adapter_destroy(clipce_adapter* adapter) { delete adapter; }

clipce_status clipce_adapter_offset_weight(const clipce_adapter* adapter, const double* visual, size_t visual_dim,
                                           const double* roi, size_t roi_dim, const double* t_pos,
                                           const double* t_neg, double* out) {
  return guarded([&] {
    need(adapter, "adapter");
    need(visual, "visual");
    need(roi, "roi");
    need(t_pos, "t_pos");
    need(t_neg, "t_neg");
    need(out, "out");
    const std::vector<double> adapted =
        adapter->impl.adapt(std::span<const double>(visual, visual_dim), std::span<const double>(roi, roi_dim));
    *out = fame::offset_weight(adapted, std::span<const double>(t_pos, adapted.size()),
                               std::span<const double>(t_neg, adapted.size()));
  });
}

clipce_status clipce_run_create(const char* config_path, clipce_run** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto run = std::make_unique<clipce_run>();
    if (config_path) {
      run->config = app::load_run_config(config_path);
    } else {
      run->config.base_dir = std::filesystem::current_path();
    }
    *out = run.release();
  });
}

void clipce_run_destroy(clipce_run* run) { delete run; }

clipce_status clipce_run_set(clipce_run* run, const char* key, const char* json_value) {
  return guarded([&] {
    need(run, "run");
    need(key, "key");
    need(json_value, "json_value");
    Json value;
    try {
      value = Json::parse(json_value);
    } catch (const Json::exception& e) {
      fail(ErrorCode::kConfig, std::string("value for ") + key + " is not valid JSON: " + e.what());
    }
    app::override_key(run->config, key, value);
  });
}

clipce_status clipce_run_hash(const clipce_run* run, char* buf, size_t buf_size) {
  return guarded([&] {
    need(run, "run");
    need(buf, "buf");
    const std::string h = app::config_hash(run->config);
    require(buf_size > h.size(), ErrorCode::kInput, "hash buffer too small");
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

clipce_status clipce_make_shapes(const char* out_dir, size_t images, uint64_t seed) {
  return guarded([&] {
    need(out_dir, "out_dir");
    data::ShapesOptions o;
    o.images = images;
    o.seed = seed;
    data::make_shapes(out_dir, o);
  });
}

clipce_status clipce_ingest_coco(const char* annotation_json, const char* image_root, const char* depth_root,
                                 const char* out_manifest) {
  return guarded([&] {
    need(annotation_json, "annotation_json");
    need(image_root, "image_root");
    need(out_manifest, "out_manifest");
    std::optional<std::filesystem::path> depth;
    if (depth_root) depth = depth_root;
    data::IngestReport report;
    const data::DatasetManifest m = data::ingest_coco(annotation_json, image_root, depth, &report);
    if (report.dropped_boxes > 0) warn(std::to_string(report.dropped_boxes) + " zero-area boxes dropped");
    for (const std::string& missing : report.missing_images) warn("missing image: " + missing);
    data::save_manifest(out_manifest, m);
  });
}

clipce_status clipce_hazegen(const clipce_run* run, const char* manifest, const char* out_dir) {
  return guarded([&] {
    need(run, "run");
    app::run_hazegen(run->config, manifest_or(run, manifest), path_or(out_dir, run->config.work_dir() / "hazy"));
  });
}

clipce_status clipce_weights(const clipce_run* run, const char* manifest, const char* out_path) {
  return guarded([&] {
    need(run, "run");
    const std::filesystem::path m = manifest_or(run, manifest);
    const std::filesystem::path out =
        out_path ? std::filesystem::path(out_path) : app::default_cache_path(run->config, data::load_manifest(m));
    app::run_weights(run->config, m, out);
  });
}

clipce_status clipce_train(const clipce_run* run, const char* manifest, const char* cache, const char* out_dir) {
  return guarded([&] {
    need(run, "run");
    const std::filesystem::path m = manifest_or(run, manifest);
    const std::filesystem::path c =
        cache ? std::filesystem::path(cache) : app::default_cache_path(run->config, data::load_manifest(m));
    app::run_train(run->config, m, c, path_or(out_dir, run->config.work_dir() / "train"));
  });
}

clipce_status clipce_eval(const clipce_run* run, const char* checkpoint, const char* manifest, const char* out_path,
                          double* map50) {
  return guarded([&] {
    need(run, "run");
    const std::filesystem::path m =
        manifest ? std::filesystem::path(manifest) : run->config.eval_manifest_path().value_or(manifest_or(run, nullptr));
    const eval::EvalReport r =
        app::run_eval(run->config, path_or(checkpoint, run->config.work_dir() / "train"), m,
                      path_or(out_path, run->config.work_dir() / "eval" / "report.json"));
    if (map50) *map50 = r.map50;
  });
}

clipce_status clipce_analyze_weights(const char* cache, const char* log, const char* manifest, const char* out_csv) {
  return guarded([&] {
    need(cache, "cache");
    need(log, "log");
    need(out_csv, "out_csv");
    std::optional<std::filesystem::path> m;
    if (manifest) m = manifest;
    app::run_analyze(cache, log, m, out_csv);
  });
}

clipce_status clipce_pipeline(const clipce_run* run, int* ran, int* skipped) {
  return guarded([&] {
    need(run, "run");
    const app::PipelineResult r = app::run_pipeline(run->config);
    int n_ran = 0, n_skipped = 0;
    for (const auto& s : r.stages) (s.skipped ? n_skipped : n_ran)++;
    if (ran) *ran = n_ran;
    if (skipped) *skipped = n_skipped;
  });
}

}  // extern "C"
