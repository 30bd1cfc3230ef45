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

#include "nowfuse/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nowfuse/parallel.hpp"

namespace nowfuse {

namespace {

void check_dims(int height, int width) {
  require(height >= 1 && width >= 1, ErrorCode::kInvalidArgument,
          "grid dimensions must be >= 1, got " + std::to_string(height) + "x" +
              std::to_string(width));
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Grid::Grid(int height, int width, float fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  require(std::isfinite(fill), ErrorCode::kNonFinite, "non-finite fill value");
  values_.assign(static_cast<std::size_t>(height) * width, fill);
}

Grid::Grid(int height, int width, std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  require(values_.size() == static_cast<std::size_t>(height) * width,
          ErrorCode::kDimensionMismatch,
          "grid payload length does not match dimensions");
  for (float v : values_)
    require(std::isfinite(v), ErrorCode::kNonFinite, "non-finite grid value");
}

double Grid::sample(double y, double x) const {
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  const double top = (1.0 - fx) * (*this)(y0, x0) + fx * (*this)(y0, x1);
  const double bottom = (1.0 - fx) * (*this)(y1, x0) + fx * (*this)(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  require(a.same_shape(b), ErrorCode::kDimensionMismatch,
          std::string(what) + ": dimension mismatch (" +
              std::to_string(a.height()) + "x" + std::to_string(a.width()) +
              " vs " + std::to_string(b.height()) + "x" +
              std::to_string(b.width()) + ")");
}

FlowField::FlowField(int height, int width)
    : dx_(height, width), dy_(height, width) {}

FlowField::FlowField(Grid dx, Grid dy) : dx_(std::move(dx)), dy_(std::move(dy)) {
  require_same_shape(dx_, dy_, "flow field");
}

Grid resample_bilinear(const Grid& g, int new_height, int new_width) {
  require(new_height >= 1 && new_width >= 1, ErrorCode::kInvalidArgument,
          "resample target dimensions must be >= 1");
  const double sy = static_cast<double>(g.height()) / new_height;
  const double sx = static_cast<double>(g.width()) / new_width;
  std::vector<float> out(static_cast<std::size_t>(new_height) * new_width);
  parallel_for(new_height, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      const double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
      for (int x = 0; x < new_width; ++x) {
        const double src_x = (x + 0.5) * sx - 0.5;
        out[y * new_width + x] = static_cast<float>(g.sample(src_y, src_x));
      }
    }
  });
  return Grid(new_height, new_width, std::move(out));
}

Grid clamp01(const Grid& g) { return clamp01(g.height(), g.width(), g.values()); }

Grid clamp01(int height, int width, std::span<const float> raw) {
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    require(std::isfinite(raw[i]), ErrorCode::kNonFinite,
            "clamp01: non-finite value at index " + std::to_string(i));
    out[i] = std::min(1.0f, std::max(0.0f, raw[i]));
  }
  return Grid(height, width, std::move(out));
}

Grid gaussian_blur(const Grid& g, double sigma) {
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::kInvalidArgument,
          "blur sigma must be >= 0");
  if (sigma == 0.0) return g;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = g.height();
  const int w = g.width();
  std::vector<double> tmp(g.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * g(y, std::clamp(x + i, 0, w - 1));
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  std::vector<float> out(g.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  return Grid(h, w, std::move(out));
}

Grid box_downsample(const Grid& g, int factor) {
  require(factor >= 1, ErrorCode::kInvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return g;
  const int oh = (g.height() + factor - 1) / factor;
  const int ow = (g.width() + factor - 1) / factor;
  std::vector<float> out(static_cast<std::size_t>(oh) * ow);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      int n = 0;
      for (int y = oy * factor; y < std::min(g.height(), (oy + 1) * factor); ++y)
        for (int x = ox * factor; x < std::min(g.width(), (ox + 1) * factor); ++x) {
          acc += g(y, x);
          ++n;
        }
      out[static_cast<std::size_t>(oy) * ow + ox] = static_cast<float>(acc / n);
    }
  return Grid(oh, ow, std::move(out));
}

}  // namespace nowfuse
