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

#ifndef NOWFUSE_GRID_HPP_
#define NOWFUSE_GRID_HPP_

#include <span>
#include <vector>

#include "nowfuse/error.hpp"

namespace nowfuse {

// Single-channel 2-D field, row-major, origin top-left, y down. Values are
// stored as 32-bit reals and are always finite. Immutable after construction.
class Grid {
 public:
  Grid(int height, int width, float fill = 0.0f);
  // Throws kNonFinite on NaN/Inf and kDimensionMismatch on a size mismatch.
  Grid(int height, int width, std::vector<float> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  float operator()(int y, int x) const {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  float operator[](std::size_t i) const { return values_[i]; }
  std::span<const float> values() const { return values_; }

  // Bilinear sample at real-valued (y, x) with clamp-to-edge.
  double sample(double y, double x) const;

  bool same_shape(const Grid& o) const {
    return height_ == o.height_ && width_ == o.width_;
  }
  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  int height_;
  int width_;
  std::vector<float> values_;
};

void require_same_shape(const Grid& a, const Grid& b, const char* what);

// A grid whose values are confined to [0, 1]. The tag keeps masks and alpha
// maps from being mixed up with each other or with plain intensity grids.
template <class Tag>
class UnitGrid {
 public:
  explicit UnitGrid(Grid g) : grid_(std::move(g)) {
    for (float v : grid_.values())
      require(v >= 0.0f && v <= 1.0f, ErrorCode::kInvalidArgument,
              "unit grid value outside [0,1]");
  }
  static UnitGrid filled(int height, int width, float v) {
    return UnitGrid(Grid(height, width, v));
  }

  const Grid& grid() const { return grid_; }
  int height() const { return grid_.height(); }
  int width() const { return grid_.width(); }
  std::size_t size() const { return grid_.size(); }
  float operator()(int y, int x) const { return grid_(y, x); }
  float operator[](std::size_t i) const { return grid_[i]; }
  std::span<const float> values() const { return grid_.values(); }
  friend bool operator==(const UnitGrid& a, const UnitGrid& b) = default;

 private:
  Grid grid_;
};

struct MaskTag {};
using MaskGrid = UnitGrid<MaskTag>;

// Per-pixel displacement (dx, dy) in pixels.
class FlowField {
 public:
  FlowField(int height, int width);
  FlowField(Grid dx, Grid dy);

  int height() const { return dx_.height(); }
  int width() const { return dx_.width(); }
  const Grid& dx() const { return dx_; }
  const Grid& dy() const { return dy_; }
  friend bool operator==(const FlowField& a, const FlowField& b) = default;

 private:
  Grid dx_;
  Grid dy_;
};

// Bilinear resampling with pixel-center alignment and clamp-to-edge.
Grid resample_bilinear(const Grid& g, int new_height, int new_width);

Grid clamp01(const Grid& g);
// Clamps a raw buffer into a grid; rejects non-finite values.
Grid clamp01(int height, int width, std::span<const float> raw);

// Separable Gaussian blur, clamp-to-edge. sigma == 0 returns the input.
Grid gaussian_blur(const Grid& g, double sigma);

// Averages factor x factor blocks; edge blocks average what is present.
Grid box_downsample(const Grid& g, int factor);

}  // namespace nowfuse

#endif  // NOWFUSE_GRID_HPP_
