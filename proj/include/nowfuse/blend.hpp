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

#ifndef NOWFUSE_BLEND_HPP_
#define NOWFUSE_BLEND_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nowfuse/grid.hpp"

namespace nowfuse {

struct Radar {
  double cx;
  double cy;
  double radius;
};

// Radar sites in pixel coordinates plus the width of the blend ramp, which
// occupies the annulus [radius - ramp_width, radius] of every site.
struct CoverageGeometry {
  std::vector<Radar> radars;
  double ramp_width = 4.0;

  void validate() const;
  bool covers(double y, double x) const;
};

// Text form: a "ramp <w>" header line, then one "cx cy radius" line per site.
// Blank lines and '#' comments are ignored.
CoverageGeometry parse_coverage(const std::string& text);
CoverageGeometry read_coverage(const std::filesystem::path& path);
std::string format_coverage(const CoverageGeometry& cov);

enum class AlphaKind {
  kInference,  // 1 in the core, ramps to 0 at the coverage edge
  kTraining,   // 0 on the band centerline, 1 outside the band
};

struct AlphaTag {};

class AlphaMap {
 public:
  AlphaMap(UnitGrid<AlphaTag> values, AlphaKind kind)
      : values_(std::move(values)), kind_(kind) {}
  static AlphaMap filled(int height, int width, float v,
                         AlphaKind kind = AlphaKind::kInference) {
    return AlphaMap(UnitGrid<AlphaTag>::filled(height, width, v), kind);
  }

  AlphaKind kind() const { return kind_; }
  const Grid& grid() const { return values_.grid(); }
  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  std::size_t size() const { return values_.size(); }
  float operator()(int y, int x) const { return values_(y, x); }
  float operator[](std::size_t i) const { return values_[i]; }

  // Pixels inside the blend band: alpha < 1 for training maps, 0 < alpha < 1
  // for inference maps.
  bool in_band(std::size_t i) const;

 private:
  UnitGrid<AlphaTag> values_;
  AlphaKind kind_;
};

AlphaMap build_alpha_inference(const CoverageGeometry& cov, int height, int width);
AlphaMap build_alpha_training(const CoverageGeometry& cov, int height, int width);

// out = a * i1 + (1 - a) * i2
Grid alpha_blend(const Grid& i1, const Grid& i2, const AlphaMap& a);

// out = |1 - 2a| * i + (1 - |1 - 2a|) * n
Grid corrupt(const Grid& i, const AlphaMap& a, const Grid& n);

// Radar where covered, satellite elsewhere.
Grid hard_composite(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov);

enum class NoiseKind { kUniform, kGaussianSmoothed };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kUniform;
  std::uint64_t seed = 0;
  double smooth_sigma = 2.0;  // gaussian-smoothed only
};

Grid noise_field(const NoiseSpec& spec, int height, int width);

enum class MaskMode { kBinary, kSemi, kAlpha };

MaskMode parse_mask_mode(const std::string& s);
const char* to_string(MaskMode m);

// Network-input confidence: 1 outside the band; inside it 0 (binary),
// 0.5 (semi) or the training-alpha value (alpha). For inference maps the
// training-alpha value is |1 - 2a|.
MaskGrid inference_mask(const AlphaMap& a, MaskMode mode);

}  // namespace nowfuse

#endif  // NOWFUSE_BLEND_HPP_
