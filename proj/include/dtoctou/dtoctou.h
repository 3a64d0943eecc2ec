/*
 * Copyright 2026 The dtoctou Authors
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

/* Stable C interface to the dtoctou simulator.
 *
 * Every function returns a dt_status. On failure a message describing the
 * most recent error of the calling thread is available from dt_last_error().
 * Strings returned through char** out-parameters are owned by the caller
 * and released with dt_string_free(). Handles are released with their
 * matching *_free function; passing NULL to any *_free is a no-op.
 */

#ifndef DTOCTOU_DTOCTOU_H_
#define DTOCTOU_DTOCTOU_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DT_API __declspec(dllexport)
#else
#define DT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dt_status {
  DT_OK = 0,
  DT_ERR_INVALID_ARGUMENT = 1,
  DT_ERR_NOT_FOUND = 2,
  DT_ERR_DUPLICATE = 3,
  DT_ERR_OUT_OF_BOUNDS = 4,
  DT_ERR_STATE = 5,
  DT_ERR_SCHEMA = 6,
  DT_ERR_IO = 7,
  DT_ERR_UNSUPPORTED = 8,
  DT_ERR_INTERNAL = 99
} dt_status;

typedef struct dt_scenario dt_scenario;
typedef struct dt_report dt_report;
typedef struct dt_desktop dt_desktop;
typedef struct dt_frame dt_frame;

DT_API const char* dt_version(void);
/* Message of the last failed call on this thread; "" if none. */
DT_API const char* dt_last_error(void);
DT_API const char* dt_status_name(dt_status status);
DT_API void dt_string_free(char* s);

/* ---- Scenarios ---- */

DT_API dt_status dt_scenario_load(const char* path, dt_scenario** out);
DT_API dt_status dt_scenario_parse(const char* json_text, dt_scenario** out);
DT_API void dt_scenario_free(dt_scenario* s);

/* Overrides; each wins over the value from the file. */
DT_API dt_status dt_scenario_set_trials(dt_scenario* s, int64_t trials);
DT_API dt_status dt_scenario_set_seed(dt_scenario* s, uint64_t seed);
/* on | off | all | l1 | l2a | l2b | l2c | mask:<layer>,<layer>... */
DT_API dt_status dt_scenario_set_defense(dt_scenario* s, const char* spec);
/* oracle | offset:<lo>,<hi> */
DT_API dt_status dt_scenario_set_grounding(dt_scenario* s, const char* spec);
/* fixed:<seconds> | lognormal */
DT_API dt_status dt_scenario_set_gap(dt_scenario* s, const char* spec);
/* full | quarter | <divisor> */
DT_API dt_status dt_scenario_set_scale(dt_scenario* s, const char* spec);

DT_API dt_status dt_scenario_name(const dt_scenario* s, char** out);
/* Fully resolved configuration as JSON text. */
DT_API dt_status dt_scenario_config_json(const dt_scenario* s, char** out);
DT_API dt_status dt_scenario_cell_count(const dt_scenario* s, size_t* out);
DT_API dt_status dt_scenario_expectation_count(const dt_scenario* s,
                                               size_t* out);

/* ---- Campaigns and reports ---- */

/* Runs every cell of the scenario on `jobs` worker threads (>= 1). */
DT_API dt_status dt_run(const dt_scenario* s, int jobs, dt_report** out);
/* Appends the cells of `src` to `dst`. Cell ids must stay unique. */
DT_API dt_status dt_report_append(dt_report* dst, const dt_report* src);
DT_API void dt_report_free(dt_report* r);

DT_API dt_status dt_report_cell_count(const dt_report* r, size_t* out);
DT_API dt_status dt_report_trial_count(const dt_report* r, size_t* out);

/* csv | json | jsonl | summary | styles | raise | dom | defense_overlay |
 * defense_raise | defense_dom */
DT_API dt_status dt_report_emit(const dt_report* r, const char* format,
                                char** out);
/* Writes report.csv, report.json and trials.jsonl into `dir`, creating it
 * if needed. */
DT_API dt_status dt_report_write(const dt_report* r, const char* dir);
/* Rebuilds a report from trials.jsonl content. */
DT_API dt_status dt_report_from_jsonl(const char* text, dt_report** out);

/* Evaluates the scenario's expectations against the merged statistics of
 * the report. `failed` receives the number of failing expectations and
 * `text` (optional) one line per expectation. */
DT_API dt_status dt_report_check(const dt_report* r, const dt_scenario* s,
                                 size_t* failed, char** text);

/* ---- Verifier self-test and calibration ---- */

/* `tau1` < 0 keeps the default; `defense` NULL keeps the default layers.
 * `failed` receives the number of failing cases; `json_out` (optional) the
 * case list. */
DT_API dt_status dt_selftest(double tau1, const char* defense, size_t* failed,
                             char** json_out);

/* Benign trials of the scenario's first cell. Fails with
 * DT_ERR_INVALID_ARGUMENT when the scenario carries an attack. */
DT_API dt_status dt_calibrate(const dt_scenario* s, int64_t n, char** json_out);

/* ---- Desktop and frames ---- */

DT_API dt_status dt_desktop_build(const char* task_id, int scale_divisor,
                                  int benign_dynamics, int dock,
                                  dt_desktop** out);
DT_API void dt_desktop_free(dt_desktop* d);
DT_API dt_status dt_desktop_size(const dt_desktop* d, int* width, int* height);
DT_API dt_status dt_desktop_advance(dt_desktop* d, int64_t t_ms);
/* Window list as the visible registry query shows it, one "id title" row
 * per line. */
DT_API dt_status dt_desktop_registry(const dt_desktop* d, char** out);
/* Dispatches a click; `receiver_json` (optional) describes who got it. */
DT_API dt_status dt_desktop_click(dt_desktop* d, int x, int y,
                                  char** receiver_json);
DT_API dt_status dt_desktop_render(const dt_desktop* d, dt_frame** out);

DT_API void dt_frame_free(dt_frame* f);
DT_API dt_status dt_frame_size(const dt_frame* f, int* width, int* height);
DT_API dt_status dt_frame_digest(const dt_frame* f, uint64_t* out);
/* Row-major RGB bytes; valid until the frame is freed. */
DT_API dt_status dt_frame_pixels(const dt_frame* f, const uint8_t** data,
                                 size_t* size);
DT_API dt_status dt_frame_write_png(const dt_frame* f, const char* path);
DT_API dt_status dt_frame_write_raw(const dt_frame* f, const char* path);
/* SSIM of the click patch centred at (x, y). */
DT_API dt_status dt_frame_ssim_patch(const dt_frame* a, const dt_frame* b,
                                     int x, int y, int patch, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DTOCTOU_DTOCTOU_H_ */
