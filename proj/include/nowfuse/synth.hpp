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

#ifndef NOWFUSE_SYNTH_HPP_
#define NOWFUSE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nowfuse/blend.hpp"
#include "nowfuse/flow.hpp"
#include "nowfuse/grid.hpp"
#include "nowfuse/train.hpp"

namespace nowfuse {

// Sum of Gaussian blobs advected by a uniform velocity plus an optional
// rotation about the grid center.
struct SceneSpec {
  std::uint64_t seed = 0;
  int height = 64;
  int width = 64;
  int n_blobs = 12;
  double sigma_min = 4.0;
  double sigma_max = 16.0;
  double intensity_min = 0.3;
  double intensity_max = 1.0;
  double vx = 0.0;        // px per frame
  double vy = 0.0;        // px per frame
  double rotation = 0.0;  // rad per frame

  void validate() const;
};

struct SensorSpec {
  double radar_noise = 0.02;
  CoverageGeometry coverage;
  double sat_blur = 3.0;
  int sat_factor = 4;
  double sat_gain = 0.9;
  double sat_bias = 0.05;

  void validate() const;
};

// Single centred site covering most of the grid, ramp scaled from 16 px at 256.
CoverageGeometry default_coverage(int height, int width);

FrameSequence gen_sequence(const SceneSpec& spec, int n_frames, double dt_minutes);

// truth + N(0, radar_noise) inside coverage, 0 outside, clamped.
Grid radar_view(const Grid& truth, const SensorSpec& s, std::uint64_t seed);

// gain * blur(truth) + bias, block-averaged by sat_factor and bilinearly
// upsampled back, clamped. Deterministic; seed is accepted for symmetry with
// radar_view and does not change the result.
Grid satellite_view(const Grid& truth, const SensorSpec& s, std::uint64_t seed = 0);

struct TrainingSetSpec {
  SceneSpec scene;
  SensorSpec sensor;
  CoverageGeometry band;  // one site; jittered per item
  double band_jitter = 0.2;
  NoiseSpec noise;
};

TrainingSetSpec default_training_spec(int height = 64, int width = 64);

struct SynthItem {
  Grid corrupted;
  MaskGrid mask_binary;
  MaskGrid mask_semi;
  MaskGrid mask_alpha;
  Grid target;
  AlphaMap alpha;
};

// Item k of the set keyed by seed; independent of every other item.
SynthItem make_training_item(const TrainingSetSpec& spec, std::uint64_t seed,
                             std::size_t index);
std::vector<SynthItem> make_training_items(const TrainingSetSpec& spec, std::uint64_t seed,
                                           std::size_t n_items, std::size_t first = 0);

std::vector<TrainingItem> to_training_items(const std::vector<SynthItem>& items,
                                            MaskMode mode);

// Writes five NFG1 files per item plus manifest.txt (one line per item:
// corrupted, mask_binary, mask_semi, mask_alpha, target). Returns the
// manifest text.
std::string make_training_set(const TrainingSetSpec& spec, std::uint64_t seed,
                              std::size_t n_items, const std::filesystem::path& out_dir);

std::vector<TrainingItem> load_training_set(const std::filesystem::path& dir, MaskMode mode);

// "key value" lines; unknown keys are rejected.
TrainingSetSpec parse_synth_spec(const std::string& text);
TrainingSetSpec read_synth_spec(const std::filesystem::path& path);

}  // namespace nowfuse

#endif  // NOWFUSE_SYNTH_HPP_
