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

#ifndef CLIPCE_CLIPCE_H_
#define CLIPCE_CLIPCE_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CLIPCE_API __attribute__((visibility("default")))
#else
#define CLIPCE_API
#endif

typedef enum clipce_status {
  CLIPCE_OK = 0,
  CLIPCE_ERR_INPUT = 1,
  CLIPCE_ERR_TEMPLATE = 2,
  CLIPCE_ERR_PROVIDER = 3,
  CLIPCE_ERR_CONFIG = 4,
  CLIPCE_ERR_NUMERIC = 5,
  CLIPCE_ERR_STATE = 6,
  CLIPCE_ERR_IO = 7,
  CLIPCE_ERR_PARSE = 8,
  CLIPCE_ERR_DEGENERATE = 9,
  CLIPCE_ERR_INTERNAL = 10
} clipce_status;

CLIPCE_API const char* clipce_version(void);
CLIPCE_API const char* clipce_status_name(clipce_status status);
// Message of the last failed call on this thread; "" after a success.
CLIPCE_API const char* clipce_last_error(void);
// Silences log output on stderr.
CLIPCE_API void clipce_set_quiet(int quiet);

/* Weights and losses. Probabilities are arrays of k entries summing to 1. */

typedef struct clipce_schedule {
  double alpha1;
  double alpha2;
  int pretrain_epochs;
  int total_epochs;
} clipce_schedule;

CLIPCE_API clipce_schedule clipce_default_schedule(void);

CLIPCE_API clipce_status clipce_similarity(const double* a, const double* b, size_t n, double* out);
CLIPCE_API clipce_status clipce_ame_weight(double sim_pos, double sim_neg, double* out);
CLIPCE_API clipce_status clipce_focal_weight(double p_t, double gamma, double* out);
CLIPCE_API clipce_status clipce_offset_weight(const double* adapted, const double* t_pos, const double* t_neg,
                                              size_t n, double* out);
CLIPCE_API clipce_status clipce_soft_label(double p_t, double theta, int* out);
CLIPCE_API clipce_status clipce_adapter_loss(int u, double w_offset, double* out);
CLIPCE_API clipce_status clipce_fame_weight(double w_ame, double w_offset, double* out);
CLIPCE_API clipce_status clipce_ce_loss(const double* probs, size_t k, size_t gt_index, double* out);
CLIPCE_API clipce_status clipce_focal_loss(const double* probs, size_t k, size_t gt_index, double gamma,
                                           double* out);
// w_fame may be NULL during the AME phase.
CLIPCE_API clipce_status clipce_clipce_loss(const double* probs, size_t k, size_t gt_index, double w_ame,
                                            const double* w_fame, int epoch, const clipce_schedule* schedule,
                                            double* out);
// *is_fame is 0 for the AME phase, 1 for the FAME phase.
CLIPCE_API clipce_status clipce_active_branch(int epoch, const clipce_schedule* schedule, int* is_fame);

/* Haze. Images are interleaved RGB doubles in [0, 1], n pixels. */

CLIPCE_API clipce_status clipce_transmission(const double* depth, size_t n, double beta, double* out);
CLIPCE_API clipce_status clipce_compose_haze(const double* clear, const double* trans, size_t n,
                                             const double atmospheric_light[3], double* out);
CLIPCE_API clipce_status clipce_recover_clear(const double* hazy, const double* trans, size_t n,
                                              const double atmospheric_light[3], double* out);

/* Embedding provider. backend is "real" or "stub:<seed>". */

typedef struct clipce_provider clipce_provider;

CLIPCE_API clipce_status clipce_provider_create(const char* backend, size_t dim, clipce_provider** out);
CLIPCE_API void clipce_provider_destroy(clipce_provider* provider);
CLIPCE_API size_t clipce_provider_dim(const clipce_provider* provider);
CLIPCE_API clipce_status clipce_provider_encode_text(const clipce_provider* provider, const char* text,
                                                     double* out, size_t n);

/* FAME adapter. */

typedef struct clipce_adapter clipce_adapter;

CLIPCE_API clipce_status clipce_adapter_create(size_t input_dim, size_t hidden_dim, size_t output_dim,
                                               double learning_rate, uint64_t seed, clipce_adapter** out);
CLIPCE_API clipce_status clipce_adapter_load(const char* path, clipce_adapter** out);
CLIPCE_API clipce_status clipce_adapter_save(const clipce_adapter* adapter, const char* path);
CLIPCE_API void clipce_adapter_destroy(clipce_adapter* adapter);
CLIPCE_API clipce_status clipce_adapter_offset_weight(const clipce_adapter* adapter, const double* visual,
                                                      size_t visual_dim, const double* roi, size_t roi_dim,
                                                      const double* t_pos, const double* t_neg, double* out);

/* Run configuration and workflows. */

typedef struct clipce_run clipce_run;

// config_path may be NULL for defaults (paths then resolve against the
// working directory).
CLIPCE_API clipce_status clipce_run_create(const char* config_path, clipce_run** out);
CLIPCE_API void clipce_run_destroy(clipce_run* run);
// Overrides one dotted key with a JSON literal, e.g. ("loss.alpha1", "2").
CLIPCE_API clipce_status clipce_run_set(clipce_run* run, const char* key, const char* json_value);
// Writes the NUL-terminated config hash (64 hex chars) into buf.
CLIPCE_API clipce_status clipce_run_hash(const clipce_run* run, char* buf, size_t buf_size);

CLIPCE_API clipce_status clipce_make_shapes(const char* out_dir, size_t images, uint64_t seed);
// depth_root may be NULL.
CLIPCE_API clipce_status clipce_ingest_coco(const char* annotation_json, const char* image_root,
                                            const char* depth_root, const char* out_manifest);
// For the workflow calls below, a NULL manifest means the config's
// data.manifest and a NULL output means the matching location under
// data.work_dir (hazy/, weights.jsonl, train/, eval/report.json).
CLIPCE_API clipce_status clipce_hazegen(const clipce_run* run, const char* manifest, const char* out_dir);
CLIPCE_API clipce_status clipce_weights(const clipce_run* run, const char* manifest, const char* out_path);
// A NULL cache means the default cache location; a missing or stale cache
// falls back to computing AME weights on the fly.
CLIPCE_API clipce_status clipce_train(const clipce_run* run, const char* manifest, const char* cache,
                                      const char* out_dir);
// A NULL checkpoint means the latest epoch under <work_dir>/train. map50 may
// be NULL.
CLIPCE_API clipce_status clipce_eval(const clipce_run* run, const char* checkpoint, const char* manifest,
                                     const char* out_path, double* map50);
// manifest may be NULL.
CLIPCE_API clipce_status clipce_analyze_weights(const char* cache, const char* log, const char* manifest,
                                                const char* out_csv);
// *ran and *skipped receive stage counts; either may be NULL.
CLIPCE_API clipce_status clipce_pipeline(const clipce_run* run, int* ran, int* skipped);

#ifdef __cplusplus
}
#endif

#endif  // CLIPCE_CLIPCE_H_
