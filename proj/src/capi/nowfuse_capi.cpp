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

#include "nowfuse/nowfuse.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nowfuse/blend.hpp"
#include "nowfuse/error.hpp"
#include "nowfuse/flow.hpp"
#include "nowfuse/io.hpp"
#include "nowfuse/metrics.hpp"
#include "nowfuse/pipeline.hpp"
#include "nowfuse/synth.hpp"
#include "nowfuse/train.hpp"

struct nf_grid {
  nowfuse::Field field;
};

struct nf_model {
  nowfuse::NetworkParams<float> params;
  std::vector<double> losses;
};

struct nf_coverage {
  nowfuse::CoverageGeometry geometry;
};

namespace {

using nowfuse::ErrorCode;
using nowfuse::fail;
using nowfuse::require;

thread_local std::string g_last_error;

nf_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return NF_ERR_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return NF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::kFormat: return NF_ERR_FORMAT;
    case ErrorCode::kIo: return NF_ERR_IO;
    case ErrorCode::kNonFinite: return NF_ERR_NON_FINITE;
    case ErrorCode::kDiverged: return NF_ERR_DIVERGED;
  }
  return NF_ERR_INTERNAL;
}

// Runs fn, translating exceptions into a status and nf_last_error text.
template <typename Fn>
nf_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return NF_OK;
  } catch (const nowfuse::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return NF_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

nowfuse::Grid single(const nf_grid* g, const char* name) {
  need(g, name);
  if (g->field.channels != 1)
    fail(ErrorCode::kDimensionMismatch, std::string(name) + " must have exactly one channel");
  return g->field.channel(0);
}

nf_grid* wrap(nowfuse::Field f) { return new nf_grid{std::move(f)}; }
nf_grid* wrap(const nowfuse::Grid& g) { return wrap(nowfuse::to_field(g)); }

nowfuse::MaskMode to_mask_mode(nf_mask_mode m) {
  switch (m) {
    case NF_MASK_BINARY: return nowfuse::MaskMode::kBinary;
    case NF_MASK_SEMI: return nowfuse::MaskMode::kSemi;
    case NF_MASK_ALPHA: return nowfuse::MaskMode::kAlpha;
  }
  fail(ErrorCode::kInvalidArgument, "unknown mask mode");
}

nowfuse::BlendMode to_blend_mode(nf_blend_mode m) {
  switch (m) {
    case NF_BLEND_NONE: return nowfuse::BlendMode::kNone;
    case NF_BLEND_ALPHA: return nowfuse::BlendMode::kAlpha;
    case NF_BLEND_INPAINT: return nowfuse::BlendMode::kInpaint;
  }
  fail(ErrorCode::kInvalidArgument, "unknown blend mode");
}

nowfuse::FlowParams to_flow_params(const nf_flow_params* p) {
  nowfuse::FlowParams out;
  if (p) {
    out.pyramid_levels = p->pyramid_levels;
    out.window_radius = p->window_radius;
    out.iterations_per_level = p->iterations_per_level;
    out.min_eigen_threshold = p->min_eigen_threshold;
  }
  out.validate();
  return out;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bool empty(const char* s) { return s == nullptr || *s == '\0'; }

}  // namespace

extern "C" {

NF_API const char* nf_version(void) { return "0.1.0"; }

NF_API const char* nf_status_name(nf_status status) {
  switch (status) {
    case NF_OK: return "ok";
    case NF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NF_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case NF_ERR_FORMAT: return "format error";
    case NF_ERR_IO: return "i/o error";
    case NF_ERR_NON_FINITE: return "non-finite value";
    case NF_ERR_DIVERGED: return "training diverged";
    case NF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

NF_API const char* nf_last_error(void) { return g_last_error.c_str(); }

NF_API void nf_string_free(char* s) { std::free(s); }

NF_API nf_status nf_grid_create(uint32_t height, uint32_t width, uint32_t channels,
                                const float* data, nf_grid** out) {
  return guarded([&] {
    need(out, "out");
    need(data, "data");
    require(height > 0 && width > 0 && channels > 0, ErrorCode::kInvalidArgument,
            "grid dimensions must be positive");
    nowfuse::Field f{height, width, channels, {}};
    f.data.assign(data, data + static_cast<std::size_t>(height) * width * channels);
    // Round-trip through the codec so handles always satisfy its checks.
    *out = wrap(nowfuse::decode_field(nowfuse::encode_field(f)));
  });
}

NF_API nf_status nf_grid_read(const char* path, nf_grid** out) {
  return guarded([&] {
    need(out, "out");
    need(path, "path");
    *out = wrap(nowfuse::read_field(path));
  });
}

NF_API nf_status nf_grid_write(const nf_grid* grid, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    nowfuse::write_field(grid->field, path);
  });
}

NF_API void nf_grid_destroy(nf_grid* grid) { delete grid; }

NF_API nf_status nf_grid_shape(const nf_grid* grid, uint32_t* height, uint32_t* width,
                               uint32_t* channels) {
  return guarded([&] {
    need(grid, "grid");
    if (height) *height = grid->field.height;
    if (width) *width = grid->field.width;
    if (channels) *channels = grid->field.channels;
  });
}

NF_API const float* nf_grid_data(const nf_grid* grid) {
  return grid ? grid->field.data.data() : nullptr;
}

NF_API nf_status nf_grid_export_png(const nf_grid* grid, uint32_t channel, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    require(channel < grid->field.channels, ErrorCode::kInvalidArgument,
            "channel index out of range");
    nowfuse::write_png(grid->field.channel(channel), path);
  });
}

NF_API nf_status nf_coverage_parse(const char* text, nf_coverage** out) {
  return guarded([&] {
    need(out, "out");
    need(text, "text");
    *out = new nf_coverage{nowfuse::parse_coverage(text)};
  });
}

NF_API nf_status nf_coverage_read(const char* path, nf_coverage** out) {
  return guarded([&] {
    need(out, "out");
    need(path, "path");
    *out = new nf_coverage{nowfuse::read_coverage(path)};
  });
}

NF_API nf_status nf_coverage_default(uint32_t height, uint32_t width, nf_coverage** out) {
  return guarded([&] {
    need(out, "out");
    require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
            "grid dimensions must be positive");
    *out = new nf_coverage{
        nowfuse::default_coverage(static_cast<int>(height), static_cast<int>(width))};
  });
}

NF_API void nf_coverage_destroy(nf_coverage* coverage) { delete coverage; }

NF_API void nf_flow_params_default(nf_flow_params* params) {
  if (!params) return;
  const nowfuse::FlowParams d;
  params->pyramid_levels = d.pyramid_levels;
  params->window_radius = d.window_radius;
  params->iterations_per_level = d.iterations_per_level;
  params->min_eigen_threshold = d.min_eigen_threshold;
}

NF_API nf_status nf_flow_estimate(const nf_grid* prev, const nf_grid* next,
                                  const nf_flow_params* params, nf_grid** flow_out) {
  return guarded([&] {
    need(flow_out, "flow_out");
    const auto flow = nowfuse::estimate_flow(single(prev, "prev"), single(next, "next"),
                                             to_flow_params(params));
    *flow_out = wrap(nowfuse::to_field(flow));
  });
}

NF_API nf_status nf_interpolate(const nf_grid* prev, const nf_grid* next, double t,
                                const nf_flow_params* params, nf_grid** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap(nowfuse::interpolate(single(prev, "prev"), single(next, "next"), t,
                                     to_flow_params(params)));
  });
}

NF_API nf_status nf_blend(const nf_grid* radar, const nf_grid* satellite,
                          const nf_coverage* coverage, nf_blend_mode mode,
                          const nf_model* model, nf_mask_mode mask_mode, nf_grid** out) {
  return guarded([&] {
    need(out, "out");
    need(coverage, "coverage");
    const auto m = to_blend_mode(mode);
    require(m != nowfuse::BlendMode::kInpaint || model != nullptr,
            ErrorCode::kInvalidArgument, "inpaint mode requires a model");
    *out = wrap(nowfuse::fuse_one(single(radar, "radar"), single(satellite, "satellite"),
                                  coverage->geometry, m, model ? &model->params : nullptr,
                                  to_mask_mode(mask_mode)));
  });
}

NF_API void nf_train_options_default(nf_train_options* options) {
  if (!options) return;
  const nowfuse::TrainConfig d;
  *options = nf_train_options{};
  options->mask_mode = NF_MASK_SEMI;
  options->steps = d.steps;
  options->batch_size = d.batch_size;
  options->learning_rate = d.learning_rate;
  options->lambda_hole = d.loss.hole;
  options->lambda_valid = d.loss.valid;
  options->seed = d.seed;
}

NF_API nf_status nf_train(const char* data_dir, const nf_train_options* options,
                          nf_model** out) {
  nowfuse::TrainResult result;
  const nf_status st = guarded([&] {
    need(out, "out");
    need(data_dir, "data_dir");
    nf_train_options o;
    nf_train_options_default(&o);
    if (options) o = *options;
    const auto mode = to_mask_mode(o.mask_mode);

    nowfuse::NetConfig net;
    net.rule = mode == nowfuse::MaskMode::kBinary ? nowfuse::MaskRule::kBinary
                                                  : nowfuse::MaskRule::kSoft;
    if (o.channels != nullptr && o.n_channels > 0) {
      net.channels.assign(o.channels, o.channels + o.n_channels);
      // Widths beyond the default kernel list reuse 3x3.
      net.encoder_kernels.resize(o.n_channels, 3);
    }
    nowfuse::TrainConfig cfg;
    cfg.steps = o.steps;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.learning_rate;
    cfg.loss.hole = o.lambda_hole;
    cfg.loss.valid = o.lambda_valid;
    cfg.seed = o.seed;

    nowfuse::TrainProgress progress;
    if (o.progress)
      progress = [&o](int step, double loss) { o.progress(step, loss, o.progress_user); };
    result = nowfuse::train(nowfuse::load_training_set(data_dir, mode), net, cfg, progress);
    *out = new nf_model{result.params, result.losses};
  });
  if (st == NF_OK && result.diverged) {
    g_last_error = result.message;
    return NF_ERR_DIVERGED;
  }
  return st;
}

NF_API nf_status nf_model_read(const char* path, nf_model** out) {
  return guarded([&] {
    need(out, "out");
    need(path, "path");
    *out = new nf_model{nowfuse::read_weights(path), {}};
  });
}

NF_API nf_status nf_model_write(const nf_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    nowfuse::write_weights(model->params, path);
  });
}

NF_API void nf_model_destroy(nf_model* model) { delete model; }

NF_API size_t nf_model_parameter_count(const nf_model* model) {
  return model ? model->params.parameter_count() : 0;
}

NF_API size_t nf_model_loss_count(const nf_model* model) {
  return model ? model->losses.size() : 0;
}

NF_API const double* nf_model_losses(const nf_model* model) {
  return model && !model->losses.empty() ? model->losses.data() : nullptr;
}

NF_API nf_status nf_infer(const nf_model* model, const nf_grid* image, const nf_grid* mask,
                          nf_grid** out) {
  return guarded([&] {
    need(out, "out");
    need(model, "model");
    const nowfuse::MaskGrid m(single(mask, "mask"));
    *out = wrap(nowfuse::inpaint(single(image, "image"), m, model->params));
  });
}

NF_API nf_status nf_eval(const nf_grid* a, const nf_grid* b, const nf_grid* band,
                         nf_eval_result* out) {
  return guarded([&] {
    need(out, "out");
    const nowfuse::Grid ga = single(a, "a");
    const nowfuse::Grid gb = single(b, "b");
    nf_eval_result r{};
    r.psnr = nowfuse::capped_psnr(nowfuse::psnr(ga, gb));
    r.ssim = nowfuse::ssim(ga, gb);
    if (band) {
      const nowfuse::AlphaMap map(nowfuse::UnitGrid<nowfuse::AlphaTag>(single(band, "band")),
                                  nowfuse::AlphaKind::kTraining);
      r.has_seam = 1;
      r.seam = nowfuse::seam_energy(ga, map);
    }
    *out = r;
  });
}

NF_API nf_status nf_synth(const char* spec_path, uint32_t n_items, uint64_t seed,
                          const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    require(n_items >= 1, ErrorCode::kInvalidArgument, "n_items must be >= 1");
    const auto spec =
        empty(spec_path) ? nowfuse::default_training_spec() : nowfuse::read_synth_spec(spec_path);
    nowfuse::make_training_set(spec, seed, n_items, out_dir);
  });
}

NF_API void nf_pipeline_options_default(nf_pipeline_options* options) {
  if (!options) return;
  const nowfuse::PipelineConfig d;
  *options = nf_pipeline_options{};
  options->mode = NF_BLEND_ALPHA;
  options->mask_mode = NF_MASK_SEMI;
  options->cadence_step = d.cadence_step;
  options->satellite_cadence = d.satellite_cadence;
  options->duration = d.duration;
  options->write_images = 1;
}

NF_API nf_status nf_pipeline_run(const nf_pipeline_options* options, char** report_out) {
  return guarded([&] {
    need(options, "options");
    need(options->out_dir, "out_dir");
    const nf_pipeline_options& o = *options;
    nowfuse::PipelineConfig cfg;
    const bool lists = !empty(o.satellite_list) || !empty(o.radar_list);
    require(!(lists && o.synth_spec_path != nullptr), ErrorCode::kInvalidArgument,
            "pipeline needs exactly one input source (synthetic spec or frame lists)");
    int height = 0, width = 0;
    if (lists) {
      require(!empty(o.satellite_list) && !empty(o.radar_list), ErrorCode::kInvalidArgument,
              "file input needs both a satellite list and a radar list");
      cfg.satellite_frames = nowfuse::read_frame_list(o.satellite_list);
      cfg.radar_frames = nowfuse::read_frame_list(o.radar_list);
      require(!cfg.radar_frames.empty(), ErrorCode::kInvalidArgument, "radar list is empty");
      const auto first = nowfuse::read_grid(cfg.radar_frames.front().path);
      height = first.height();
      width = first.width();
    } else {
      cfg.synthetic = empty(o.synth_spec_path) ? nowfuse::default_training_spec()
                                               : nowfuse::read_synth_spec(o.synth_spec_path);
      height = cfg.synthetic->scene.height;
      width = cfg.synthetic->scene.width;
    }
    cfg.coverage = empty(o.coverage_path) ? nowfuse::default_coverage(height, width)
                                          : nowfuse::read_coverage(o.coverage_path);
    cfg.mode = to_blend_mode(o.mode);
    if (!empty(o.model_path)) cfg.model_path = o.model_path;
    cfg.mask_mode = to_mask_mode(o.mask_mode);
    cfg.cadence_step = o.cadence_step;
    cfg.satellite_cadence = o.satellite_cadence;
    cfg.duration = o.duration;
    cfg.seed = o.seed;
    cfg.write_images = o.write_images != 0;
    cfg.out_dir = o.out_dir;
    const auto report = nowfuse::run_pipeline(cfg);
    if (report_out) *report_out = dup_string(report.text());
  });
}

}  // extern "C"
