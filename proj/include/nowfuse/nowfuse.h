// Copyright 2026 The nowfuse Authors
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

/* C interface to nowfuse. All objects are opaque handles owned by the caller
 * and released with the matching *_destroy function. Every fallible call
 * returns an nf_status; on failure nf_last_error() describes what went wrong
 * (per thread, valid until the next failing call on that thread). */
#ifndef NOWFUSE_NOWFUSE_H_
#define NOWFUSE_NOWFUSE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NOWFUSE_BUILDING_LIBRARY)
#define NF_API __attribute__((visibility("default")))
#else
#define NF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nf_status {
  NF_OK = 0,
  NF_ERR_INVALID_ARGUMENT = 1,
  NF_ERR_DIMENSION_MISMATCH = 2,
  NF_ERR_FORMAT = 3,
  NF_ERR_IO = 4,
  NF_ERR_NON_FINITE = 5,
  NF_ERR_DIVERGED = 6,
  NF_ERR_INTERNAL = 99
} nf_status;

typedef enum nf_blend_mode {
  NF_BLEND_NONE = 0,   /* hard composite */
  NF_BLEND_ALPHA = 1,
  NF_BLEND_INPAINT = 2 /* alpha blend cleaned by a model */
} nf_blend_mode;

typedef enum nf_mask_mode {
  NF_MASK_BINARY = 0,
  NF_MASK_SEMI = 1,
  NF_MASK_ALPHA = 2
} nf_mask_mode;

typedef struct nf_grid nf_grid;         /* NFG1 field: height x width x channels */
typedef struct nf_model nf_model;       /* trained network weights */
typedef struct nf_coverage nf_coverage; /* radar sites and ramp width */

NF_API const char* nf_version(void);
NF_API const char* nf_status_name(nf_status status);
NF_API const char* nf_last_error(void);

/* Strings returned through char** out-parameters are freed with this. */
NF_API void nf_string_free(char* s);

/* ---- grids ---- */

/* data holds channels*height*width floats, channel-major, row-major. */
NF_API nf_status nf_grid_create(uint32_t height, uint32_t width, uint32_t channels,
                                const float* data, nf_grid** out);
NF_API nf_status nf_grid_read(const char* path, nf_grid** out);
NF_API nf_status nf_grid_write(const nf_grid* grid, const char* path);
NF_API void nf_grid_destroy(nf_grid* grid);
NF_API nf_status nf_grid_shape(const nf_grid* grid, uint32_t* height, uint32_t* width,
                               uint32_t* channels);
/* Borrowed pointer into the grid, valid until nf_grid_destroy. */
NF_API const float* nf_grid_data(const nf_grid* grid);
/* 8-bit grayscale PNG of one channel, round(255 * clamp01(v)). */
NF_API nf_status nf_grid_export_png(const nf_grid* grid, uint32_t channel, const char* path);

/* ---- coverage ---- */

/* Text form: "ramp <w>" header, then one "cx cy radius" line per radar. */
NF_API nf_status nf_coverage_parse(const char* text, nf_coverage** out);
NF_API nf_status nf_coverage_read(const char* path, nf_coverage** out);
NF_API nf_status nf_coverage_default(uint32_t height, uint32_t width, nf_coverage** out);
NF_API void nf_coverage_destroy(nf_coverage* coverage);

/* ---- optical flow and temporal interpolation ---- */

typedef struct nf_flow_params {
  int32_t pyramid_levels;
  int32_t window_radius;
  int32_t iterations_per_level;
  double min_eigen_threshold;
} nf_flow_params;

NF_API void nf_flow_params_default(nf_flow_params* params);
/* Writes a 2-channel grid (dx, dy). params may be NULL for defaults. */
NF_API nf_status nf_flow_estimate(const nf_grid* prev, const nf_grid* next,
                                  const nf_flow_params* params, nf_grid** flow_out);
/* t in [0, 1]; t = 0 returns prev and t = 1 returns next. */
NF_API nf_status nf_interpolate(const nf_grid* prev, const nf_grid* next, double t,
                                const nf_flow_params* params, nf_grid** out);

/* ---- spatial fusion ---- */

/* model is required for NF_BLEND_INPAINT and ignored otherwise. */
NF_API nf_status nf_blend(const nf_grid* radar, const nf_grid* satellite,
                          const nf_coverage* coverage, nf_blend_mode mode,
                          const nf_model* model, nf_mask_mode mask_mode, nf_grid** out);

/* ---- inpainting network ---- */

typedef void (*nf_progress_fn)(int32_t step, double loss, void* user);

typedef struct nf_train_options {
  nf_mask_mode mask_mode;
  int32_t steps;
  int32_t batch_size;
  double learning_rate;
  double lambda_hole;
  double lambda_valid;
  uint64_t seed;
  const int32_t* channels; /* encoder widths; NULL keeps 32,64,128,256 */
  size_t n_channels;
  nf_progress_fn progress; /* optional, called after every step */
  void* progress_user;
} nf_train_options;

NF_API void nf_train_options_default(nf_train_options* options);
/* Trains on a directory written by nf_synth. On divergence returns
 * NF_ERR_DIVERGED and still hands back the last finite model in *out. */
NF_API nf_status nf_train(const char* data_dir, const nf_train_options* options,
                          nf_model** out);
NF_API nf_status nf_model_read(const char* path, nf_model** out);
NF_API nf_status nf_model_write(const nf_model* model, const char* path);
NF_API void nf_model_destroy(nf_model* model);
NF_API size_t nf_model_parameter_count(const nf_model* model);
/* Training-curve of the run that produced the model (empty when loaded). */
NF_API size_t nf_model_loss_count(const nf_model* model);
NF_API const double* nf_model_losses(const nf_model* model);
NF_API nf_status nf_infer(const nf_model* model, const nf_grid* image, const nf_grid* mask,
                          nf_grid** out);

/* ---- metrics ---- */

typedef struct nf_eval_result {
  double psnr; /* capped at 100 dB for identical inputs */
  double ssim;
  int32_t has_seam;
  double seam;
} nf_eval_result;

/* band may be NULL; otherwise a training alpha map whose pixels < 1 form the
 * seam band. */
NF_API nf_status nf_eval(const nf_grid* a, const nf_grid* b, const nf_grid* band,
                         nf_eval_result* out);

/* ---- synthetic data ---- */

/* spec_path may be NULL for the default 64x64 spec. */
NF_API nf_status nf_synth(const char* spec_path, uint32_t n_items, uint64_t seed,
                          const char* out_dir);

/* ---- end-to-end pipeline ---- */

typedef struct nf_pipeline_options {
  /* Exactly one source: synth_spec_path (may be "" for the default spec),
   * or both satellite_list and radar_list ("minutes path" lines). */
  const char* synth_spec_path;
  const char* satellite_list;
  const char* radar_list;
  const char* coverage_path; /* NULL: default coverage for the grid size */
  nf_blend_mode mode;
  const char* model_path;    /* required for NF_BLEND_INPAINT */
  nf_mask_mode mask_mode;
  double cadence_step;       /* minutes */
  double satellite_cadence;  /* synthetic source only */
  double duration;           /* synthetic source only */
  uint64_t seed;
  int32_t write_images;
  const char* out_dir;
} nf_pipeline_options;

NF_API void nf_pipeline_options_default(nf_pipeline_options* options);
/* report_out (optional) receives the key=value report; free with nf_string_free. */
NF_API nf_status nf_pipeline_run(const nf_pipeline_options* options, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* NOWFUSE_NOWFUSE_H_ */
