/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * beamadv: adversarial robustness laboratory for mmWave beam prediction
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 * ------------------------------------------------------------------------
 */

#ifndef BEAMADV_H
#define BEAMADV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BA_API __declspec(dllexport)
#else
#define BA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every fallible call returns one and records its outcome for
 * ba_last_error_json() on the calling thread. */
typedef enum ba_status
{
    BA_OK = 0,
    BA_ERR_INVALID_ARGUMENT = 1,
    BA_ERR_DIMENSION_MISMATCH = 2,
    BA_ERR_STATE = 3,
    BA_ERR_PARSE = 4,
    BA_ERR_IO = 5,
    BA_ERR_NUMERIC = 6,
    BA_ERR_CONFIG = 7,
    BA_ERR_UNSUPPORTED = 8,
    BA_ERR_INTERNAL = 99
} ba_status;

typedef struct ba_config ba_config;
typedef struct ba_experiment ba_experiment;
typedef struct ba_dataset ba_dataset;
typedef struct ba_model ba_model;
typedef struct ba_report ba_report;

/* Progress messages from long-running calls. */
typedef void (*ba_log_fn)(const char *message, void *user_data);

BA_API const char *ba_version(void);
BA_API const char *ba_status_name(int status);
/* {"status": name, "code": n, "message": text} for the last fallible call on
 * this thread; code 0 when it succeeded. Valid until the next such call. */
BA_API const char *ba_last_error_json(void);
BA_API void ba_string_free(char *s);

/* ---- configuration ---- */
BA_API ba_status ba_config_default(ba_config **out);
BA_API ba_status ba_config_parse(const char *text, ba_config **out);
BA_API ba_status ba_config_load(const char *path, ba_config **out);
BA_API ba_status ba_config_set(ba_config *cfg, const char *section, const char *key, const char *value);
/* Canonical text; free with ba_string_free. */
BA_API ba_status ba_config_text(const ba_config *cfg, char **out);
BA_API ba_status ba_config_output_dir(const ba_config *cfg, char **out);
BA_API ba_status ba_config_scenario_count(const ba_config *cfg, size_t *out);
BA_API ba_status ba_config_scenario_name(const ba_config *cfg, size_t index, char **out);
BA_API void ba_config_free(ba_config *cfg);

/* ---- experiments ---- */
/* Validates the config (a master seed is required). log may be NULL. */
BA_API ba_status ba_experiment_create(const ba_config *cfg, ba_log_fn log, void *user_data, ba_experiment **out);
/* study: "rq1", "rq2", "rq3" or "attack"; only: cell filter or NULL. */
BA_API ba_status ba_experiment_run(ba_experiment *ex, const char *study, const char *only, ba_report **out);
/* Cells finished by the running or last study, also after a failure. */
BA_API ba_status ba_experiment_partial(const ba_experiment *ex, ba_report **out);
BA_API ba_status ba_experiment_dataset(ba_experiment *ex, const char *scenario, ba_dataset **out);
/* defense: "undefended", "adversarial_training" or "distillation"; trains on demand. */
BA_API ba_status ba_experiment_model(ba_experiment *ex, const char *scenario, const char *defense, ba_model **out);
BA_API ba_status ba_experiment_set_model(ba_experiment *ex, const char *scenario, const char *defense,
                                         const ba_model *model);
BA_API void ba_experiment_free(ba_experiment *ex);

/* ---- datasets ---- */
BA_API ba_status ba_dataset_load_csv(const char *path, ba_dataset **out);
BA_API ba_status ba_dataset_save_csv(const ba_dataset *ds, const char *path);
BA_API ba_status ba_dataset_shape(const ba_dataset *ds, size_t *rows, size_t *features, size_t *labels);
/* Row-major copies; buffers must hold rows * width values. */
BA_API ba_status ba_dataset_features(const ba_dataset *ds, double *out, size_t out_len);
BA_API ba_status ba_dataset_labels(const ba_dataset *ds, double *out, size_t out_len);
BA_API void ba_dataset_free(ba_dataset *ds);

/* ---- models ---- */
BA_API ba_status ba_model_load(const char *path, ba_model **out);
BA_API ba_status ba_model_save(const ba_model *model, const char *path);
BA_API ba_status ba_model_dims(const ba_model *model, size_t *input_dim, size_t *output_dim);
BA_API ba_status ba_model_predict(const ba_model *model, const double *x, size_t rows, size_t cols, double *out,
                                  size_t out_len);
/* kind: fgsm, bim, pgd or mim with default steps, step size and clip range.
 * x_adv receives rows * cols values; mean_mse may be NULL. */
BA_API ba_status ba_model_attack(const ba_model *model, const char *kind, double epsilon, uint64_t seed,
                                 const double *x, const double *y, size_t rows, size_t x_cols, size_t y_cols,
                                 int threads, double *x_adv, double *mean_mse);
BA_API void ba_model_free(ba_model *model);

/* ---- reports ---- */
BA_API ba_status ba_report_load(const char *path, ba_report **out);
/* sidecar_extra: JSON object text merged into timestamps.json, or NULL. */
BA_API ba_status ba_report_emit(const ba_report *report, const char *dir, int svg, const char *sidecar_extra);
BA_API ba_status ba_report_json(const ba_report *report, char **out);
BA_API ba_status ba_report_cell_count(const ba_report *report, size_t *out);
BA_API void ba_report_free(ba_report *report);

#ifdef __cplusplus
}
#endif

#endif
