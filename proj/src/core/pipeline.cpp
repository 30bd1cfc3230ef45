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

#include "nowfuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nowfuse/io.hpp"
#include "nowfuse/metrics.hpp"
#include "nowfuse/random.hpp"
#include "nowfuse/train.hpp"

namespace nowfuse {

namespace {

constexpr double kTimeEps = 1e-6;

std::string stamp(double minutes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%04ld", std::lround(minutes));
  return buf;
}

bool is_multiple(double value, double base) {
  const double q = value / base;
  return std::abs(q - std::round(q)) < 1e-9;
}

struct Inputs {
  FrameSequence satellite;
  std::vector<Frame> radar;
  std::vector<std::optional<Grid>> truth;  // per radar frame, synthetic only
};

Inputs synthetic_inputs(const PipelineConfig& cfg) {
  const TrainingSetSpec& spec = *cfg.synthetic;
  SceneSpec scene = spec.scene;
  scene.seed = derive_seed(cfg.seed, 0x5049504531ULL);
  SensorSpec sensor = spec.sensor;
  sensor.coverage = cfg.coverage;
  const int n_truth = static_cast<int>(std::lround(cfg.duration / cfg.truth_step)) + 1;
  const FrameSequence truth = gen_sequence(scene, n_truth, cfg.truth_step);

  std::vector<Frame> sat, radar;
  std::vector<std::optional<Grid>> truths;
  for (const auto& f : truth.frames()) {
    if (is_multiple(f.minutes, cfg.satellite_cadence))
      sat.push_back({f.minutes, satellite_view(f.grid, sensor)});
    if (is_multiple(f.minutes, cfg.cadence_step)) {
      const auto key = derive_seed(cfg.seed, 0x52000000ULL + std::lround(f.minutes));
      radar.push_back({f.minutes, radar_view(f.grid, sensor, key)});
      truths.emplace_back(f.grid);
    }
  }
  return {FrameSequence(std::move(sat)), std::move(radar), std::move(truths)};
}

Inputs file_inputs(const PipelineConfig& cfg) {
  std::vector<Frame> sat, radar;
  for (const auto& f : cfg.satellite_frames) sat.push_back({f.minutes, read_grid(f.path)});
  for (const auto& f : cfg.radar_frames) radar.push_back({f.minutes, read_grid(f.path)});
  std::vector<std::optional<Grid>> truths(radar.size());
  return {FrameSequence(std::move(sat)), std::move(radar), std::move(truths)};
}

void emit(const PipelineConfig& cfg, const std::string& name, const Grid& g) {
  write_grid(g, cfg.out_dir / (name + ".nfg"));
  if (cfg.write_images) write_png(g, cfg.out_dir / (name + ".png"));
}

}  // namespace

BlendMode parse_blend_mode(const std::string& s) {
  if (s == "none") return BlendMode::kNone;
  if (s == "alpha") return BlendMode::kAlpha;
  if (s == "inpaint") return BlendMode::kInpaint;
  fail(ErrorCode::kInvalidArgument, "unknown blend mode '" + s + "'");
}

const char* to_string(BlendMode m) {
  switch (m) {
    case BlendMode::kNone: return "none";
    case BlendMode::kAlpha: return "alpha";
    case BlendMode::kInpaint: return "inpaint";
  }
  return "?";
}

FusionPanels fuse(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov,
                  const NetworkParams<float>* model, MaskMode mask_mode) {
  require_same_shape(radar, satellite, "fuse");
  const AlphaMap a = build_alpha_inference(cov, radar.height(), radar.width());
  FusionPanels p{hard_composite(radar, satellite, cov), clamp01(alpha_blend(radar, satellite, a)),
                 std::nullopt};
  if (model) p.inpaint = inpaint(p.alpha, inference_mask(a, mask_mode), *model);
  return p;
}

Grid fuse_one(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov,
              BlendMode mode, const NetworkParams<float>* model, MaskMode mask_mode) {
  require(mode != BlendMode::kInpaint || model != nullptr, ErrorCode::kInvalidArgument,
          "inpaint mode requires a model");
  FusionPanels p = fuse(radar, satellite, cov, mode == BlendMode::kInpaint ? model : nullptr,
                        mask_mode);
  switch (mode) {
    case BlendMode::kNone: return std::move(p.hard);
    case BlendMode::kAlpha: return std::move(p.alpha);
    case BlendMode::kInpaint: return std::move(*p.inpaint);
  }
  return std::move(p.alpha);
}

std::vector<TimedPath> read_frame_list(const std::filesystem::path& list) {
  std::ifstream in(list);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + list.string());
  std::vector<TimedPath> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    TimedPath t;
    std::string path;
    if (!(ls >> t.minutes)) continue;
    require(static_cast<bool>(ls >> path), ErrorCode::kFormat,
            list.string() + ": expected 'minutes path'");
    t.path = path;
    if (t.path.is_relative()) t.path = list.parent_path() / t.path;
    out.push_back(std::move(t));
  }
  return out;
}

void PipelineConfig::validate() const {
  const bool files = !satellite_frames.empty() || !radar_frames.empty();
  require(synthetic.has_value() != files, ErrorCode::kInvalidArgument,
          "pipeline needs exactly one input source (synthetic spec or frame lists)");
  require(mode != BlendMode::kInpaint || model_path.has_value(), ErrorCode::kInvalidArgument,
          "inpaint mode requires a model");
  require(cadence_step > 0.0, ErrorCode::kInvalidArgument, "cadence step must be > 0");
  coverage.validate();
  require(!coverage.radars.empty(), ErrorCode::kInvalidArgument,
          "coverage must list at least one radar");
  if (synthetic) {
    require(truth_step > 0.0 && satellite_cadence > 0.0 && duration > 0.0,
            ErrorCode::kInvalidArgument, "synthetic timing must be positive");
    require(is_multiple(cadence_step, truth_step) && is_multiple(satellite_cadence, truth_step) &&
                is_multiple(duration, truth_step),
            ErrorCode::kInvalidArgument,
            "synthetic cadences must be multiples of the truth step");
  }
}

std::string PipelineReport::text() const {
  std::string out;
  char buf[64];
  for (const auto& [k, v] : values) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += k + "=" + buf + "\n";
  }
  return out;
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  std::optional<NetworkParams<float>> model;
  if (cfg.model_path) model = read_weights(*cfg.model_path);

  Inputs in = cfg.synthetic ? synthetic_inputs(cfg) : file_inputs(cfg);
  require(in.satellite.size() >= 2, ErrorCode::kInvalidArgument,
          "cadence underflow: need at least 2 satellite frames");
  const FrameSequence sat = resample_cadence(in.satellite, cfg.cadence_step, cfg.flow);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  require(!ec && std::filesystem::is_directory(cfg.out_dir), ErrorCode::kIo,
          "cannot create output directory " + cfg.out_dir.string());

  PipelineReport report;
  report.values.push_back({"frames", 0.0});
  int produced = 0;
  for (const auto& s : sat.frames()) {
    std::size_t ri = 0;
    while (ri < in.radar.size() && std::abs(in.radar[ri].minutes - s.minutes) > kTimeEps) ++ri;
    if (ri == in.radar.size()) continue;
    const Grid& radar = in.radar[ri].grid;
    require_same_shape(radar, s.grid, "pipeline radar vs satellite");
    const FusionPanels p =
        fuse(radar, s.grid, cfg.coverage, model ? &*model : nullptr, cfg.mask_mode);
    const Grid& fused = cfg.mode == BlendMode::kNone    ? p.hard
                        : cfg.mode == BlendMode::kAlpha ? p.alpha
                                                        : *p.inpaint;
    const std::string t = stamp(s.minutes);
    emit(cfg, t + "_radar", radar);
    emit(cfg, t + "_satellite", s.grid);
    emit(cfg, t + "_hard", p.hard);
    emit(cfg, t + "_alpha", p.alpha);
    if (p.inpaint) emit(cfg, t + "_inpaint", *p.inpaint);
    emit(cfg, t + "_fused", fused);

    const AlphaMap band = build_alpha_training(cfg.coverage, radar.height(), radar.width());
    report.values.push_back({t + ".minutes", s.minutes});
    // Coverage that spans the whole grid leaves no seam to measure.
    const bool has_band = std::any_of(band.grid().values().begin(), band.grid().values().end(),
                                      [](float v) { return v < 1.0f; });
    if (has_band) {
      report.values.push_back({t + ".seam_hard", seam_energy(p.hard, band)});
      report.values.push_back({t + ".seam_alpha", seam_energy(p.alpha, band)});
      if (p.inpaint)
        report.values.push_back({t + ".seam_inpaint", seam_energy(*p.inpaint, band)});
    }
    if (const auto& truth = in.truth[ri]; truth && truth->height() >= 11 && truth->width() >= 11) {
      const std::pair<const char*, const Grid*> panels[] = {
          {"hard", &p.hard}, {"alpha", &p.alpha}, {"inpaint", p.inpaint ? &*p.inpaint : nullptr}};
      for (const auto& [name, g] : panels) {
        if (!g) continue;
        report.values.push_back({t + ".psnr_" + name, capped_psnr(psnr(*g, *truth))});
        report.values.push_back({t + ".ssim_" + name, ssim(*g, *truth)});
      }
    }
    ++produced;
  }
  require(produced > 0, ErrorCode::kInvalidArgument,
          "no radar frame coincides with the resampled satellite cadence");
  report.values[0].second = produced;
  write_text_atomic(cfg.out_dir / "report.txt", report.text());
  return report;
}

}  // namespace nowfuse
