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

#ifndef NOWFUSE_PIPELINE_HPP_
#define NOWFUSE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nowfuse/blend.hpp"
#include "nowfuse/flow.hpp"
#include "nowfuse/network.hpp"
#include "nowfuse/synth.hpp"

namespace nowfuse {

enum class BlendMode { kNone, kAlpha, kInpaint };

BlendMode parse_blend_mode(const std::string& s);
const char* to_string(BlendMode m);

// Spatial fusion of one radar/satellite pair.
struct FusionPanels {
  Grid hard;                    // radar where covered, satellite elsewhere
  Grid alpha;                   // alpha blend over the coverage ramp
  std::optional<Grid> inpaint;  // alpha blend cleaned by the network
};

FusionPanels fuse(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov,
                  const NetworkParams<float>* model, MaskMode mask_mode);

// Panel selected by mode; kInpaint requires a model.
Grid fuse_one(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov,
              BlendMode mode, const NetworkParams<float>* model, MaskMode mask_mode);

struct TimedPath {
  double minutes;
  std::filesystem::path path;
};

// "minutes path" per line; relative paths resolve against the list's folder.
std::vector<TimedPath> read_frame_list(const std::filesystem::path& list);

struct PipelineConfig {
  // Exactly one source: a synthetic scene, or satellite + radar frame lists.
  std::optional<TrainingSetSpec> synthetic;
  std::vector<TimedPath> satellite_frames;
  std::vector<TimedPath> radar_frames;

  CoverageGeometry coverage;
  BlendMode mode = BlendMode::kAlpha;
  std::optional<std::filesystem::path> model_path;
  MaskMode mask_mode = MaskMode::kSemi;
  double cadence_step = 10.0;
  // Synthetic source only.
  double satellite_cadence = 15.0;
  double duration = 30.0;
  double truth_step = 5.0;

  FlowParams flow;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  bool write_images = true;

  void validate() const;
};

struct PipelineReport {
  std::vector<std::pair<std::string, double>> values;  // key=value, in order
  std::string text() const;
};

// Converts the satellite sequence to the radar cadence, then writes radar,
// satellite, hard, alpha, (inpaint) and fused panels per timestamp with a
// report.txt of seam energies and, for synthetic runs, PSNR/SSIM vs truth.
PipelineReport run_pipeline(const PipelineConfig& cfg);

}  // namespace nowfuse

#endif  // NOWFUSE_PIPELINE_HPP_
