/* Copyright (c) 2026 The tscd Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the tscd library: weakly supervised segmentation training with
 * self correspondence distillation and variation-aware pseudo-label
 * refinement.
 *
 * Every function returns a tscd_status code; tscd_last_error() describes the
 * most recent failure on the calling thread. Handles are opaque and must be
 * released with their matching *_free function.
 */

#ifndef TSCD_H_
#define TSCD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TSCD_API __declspec(dllexport)
#else
#define TSCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Mirrors the CLI exit-code table. */
typedef enum tscd_status {
  TSCD_OK = 0,
  TSCD_ERR_CHECK = 1,   /* a verification check failed */
  TSCD_ERR_INVALID = 2, /* bad input, config, or file */
  TSCD_ERR_NUMERIC = 3  /* non-finite value in a computation */
} tscd_status;

typedef struct tscd_config tscd_config;
typedef struct tscd_metrics tscd_metrics;

TSCD_API const char* tscd_version(void);

/* Thread-local message for the last failing call. */
TSCD_API const char* tscd_last_error(void);

/* ---- configuration (key = value, namespaced keys, typo-safe) ---- */

TSCD_API tscd_config* tscd_config_new(void);
TSCD_API void tscd_config_free(tscd_config* cfg);
TSCD_API tscd_status tscd_config_load(tscd_config* cfg, const char* path);
TSCD_API tscd_status tscd_config_set(tscd_config* cfg, const char* key,
                                     const char* value);
TSCD_API tscd_status tscd_config_get(const tscd_config* cfg, const char* key,
                                     char* buf, size_t buf_size);

/* ---- dataset generation ---- */

TSCD_API tscd_status tscd_generate(uint64_t seed, int count, int size,
                                   int max_shapes, double color_jitter,
                                   double texture_amplitude, const char* out_dir);

/* ---- training / evaluation ---- */

/* Trains on the dataset under data_dir and writes model.ckpt,
 * loss_log.csv, and metrics.csv into out_dir. */
TSCD_API tscd_status tscd_train(const tscd_config* cfg, const char* data_dir,
                                const char* out_dir);

TSCD_API tscd_status tscd_evaluate(const char* data_dir, const char* ckpt_path,
                                   tscd_metrics** out);
TSCD_API void tscd_metrics_free(tscd_metrics* m);
TSCD_API double tscd_metrics_miou(const tscd_metrics* m);
TSCD_API double tscd_metrics_pixel_accuracy(const tscd_metrics* m);
TSCD_API int tscd_metrics_num_classes(const tscd_metrics* m);
/* NaN when the class has an empty union. */
TSCD_API double tscd_metrics_class_iou(const tscd_metrics* m, int cls);
/* `class,iou` rows plus a miou footer. */
TSCD_API tscd_status tscd_metrics_csv(const tscd_metrics* m, char* buf,
                                      size_t buf_size);

/* Ablation table (baseline, +varm, +varm+scd, +aux, +equ) trained per seed;
 * writes a CSV table to csv_path. */
TSCD_API tscd_status tscd_ablation(const tscd_config* cfg, const char* train_dir,
                                   const char* val_dir, const uint64_t* seeds,
                                   int num_seeds, const char* csv_path);

/* ---- pseudo-label refinement ---- */

/* Refines a P5 label map against its P6 image with the variation-aware
 * kernel and writes the result as P5. iterations == 0 is an exact
 * pass-through. */
TSCD_API tscd_status tscd_refine(const char* image_path, const char* label_path,
                                 const char* out_path, double alpha, double beta,
                                 const int* dilations, int num_dilations,
                                 int iterations);

/* ---- verification / visualization ---- */

/* TSCD_OK when every analytic gradient matches central finite differences
 * within 1e-4 relative error; TSCD_ERR_CHECK otherwise. The per-check
 * report is copied into buf when provided. */
TSCD_API tscd_status tscd_gradcheck(uint64_t seed, char* report_buf,
                                    size_t buf_size);

/* Writes <prefix>_cam_<class>.ppm per predicted class and <prefix>_seg.ppm. */
TSCD_API tscd_status tscd_render(const char* ckpt_path, const char* image_path,
                                 const char* out_prefix);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TSCD_H_ */
