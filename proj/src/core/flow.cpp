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

#include "nowfuse/flow.hpp"

#include <cmath>
#include <map>
#include <string>

#include "nowfuse/parallel.hpp"

namespace nowfuse {

namespace {

constexpr double kTimeEps = 1e-9;

// Summed-area table with a zero first row/column.
class Integral {
 public:
  Integral(const std::vector<double>& v, int h, int w)
      : w1_(w + 1), s_(static_cast<std::size_t>(h + 1) * (w + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += v[static_cast<std::size_t>(y) * w + x];
        at(y + 1, x + 1) = at(y, x + 1) + row;
      }
    }
  }
  // Sum over rows [y0, y1) and columns [x0, x1).
  double sum(int y0, int x0, int y1, int x1) const {
    return get(y1, x1) - get(y0, x1) - get(y1, x0) + get(y0, x0);
  }

 private:
  double& at(int y, int x) { return s_[static_cast<std::size_t>(y) * w1_ + x]; }
  double get(int y, int x) const { return s_[static_cast<std::size_t>(y) * w1_ + x]; }
  int w1_;
  std::vector<double> s_;
};

// Iterates the Lucas-Kanade update on one pyramid level. dx/dy hold the
// current flow in level pixels and are refined in place. degenerate receives
// the textureless flags of the last iteration.
void refine_level(const Grid& prev_g, const Grid& next_g, const FlowParams& p,
                  std::vector<double>& dx, std::vector<double>& dy,
                  std::vector<char>& degenerate) {
  const int h = prev_g.height();
  const int w = prev_g.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const int r = p.window_radius;
  std::vector<double> ixx(n), ixy(n), iyy(n), ixt(n), iyt(n), avg(n);
  degenerate.assign(n, 0);

  for (int it = 0; it < p.iterations_per_level; ++it) {
    std::vector<double> warped(n);
    parallel_for(h, [&](std::size_t y0, std::size_t y1) {
      for (std::size_t y = y0; y < y1; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t i = y * w + x;
          warped[i] = next_g.sample(static_cast<double>(y) + dy[i], x + dx[i]);
          avg[i] = 0.5 * (prev_g[i] + warped[i]);
        }
    });
    parallel_for(h, [&](std::size_t y0, std::size_t y1) {
      for (std::size_t yy = y0; yy < y1; ++yy) {
        const int y = static_cast<int>(yy);
        const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
        for (int x = 0; x < w; ++x) {
          const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
          const std::size_t i = yy * w + x;
          const double gx = (avg[yy * w + xp] - avg[yy * w + xm]) / std::max(1, xp - xm);
          const double gy = (avg[static_cast<std::size_t>(yp) * w + x] -
                             avg[static_cast<std::size_t>(ym) * w + x]) /
                            std::max(1, yp - ym);
          const double gt = warped[i] - prev_g[i];
          ixx[i] = gx * gx;
          ixy[i] = gx * gy;
          iyy[i] = gy * gy;
          ixt[i] = gx * gt;
          iyt[i] = gy * gt;
        }
      }
    });
    const Integral sxx(ixx, h, w), sxy(ixy, h, w), syy(iyy, h, w), sxt(ixt, h, w),
        syt(iyt, h, w);
    parallel_for(h, [&](std::size_t y0, std::size_t y1) {
      for (std::size_t yy = y0; yy < y1; ++yy) {
        const int y = static_cast<int>(yy);
        const int wy0 = std::max(0, y - r), wy1 = std::min(h, y + r + 1);
        for (int x = 0; x < w; ++x) {
          const int wx0 = std::max(0, x - r), wx1 = std::min(w, x + r + 1);
          const double area = static_cast<double>(wy1 - wy0) * (wx1 - wx0);
          const double a = sxx.sum(wy0, wx0, wy1, wx1) / area;
          const double b = sxy.sum(wy0, wx0, wy1, wx1) / area;
          const double c = syy.sum(wy0, wx0, wy1, wx1) / area;
          const double half_tr = 0.5 * (a + c);
          const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
          const std::size_t i = yy * w + x;
          if (half_tr - disc < p.min_eigen_threshold) {
            degenerate[i] = 1;
            continue;
          }
          degenerate[i] = 0;
          const double ex = sxt.sum(wy0, wx0, wy1, wx1) / area;
          const double ey = syt.sum(wy0, wx0, wy1, wx1) / area;
          const double det = a * c - b * b;
          dx[i] += -(c * ex - b * ey) / det;
          dy[i] += -(a * ey - b * ex) / det;
        }
      }
    });
  }
}

}  // namespace

void FlowParams::validate() const {
  require(pyramid_levels >= 1, ErrorCode::kInvalidArgument, "pyramid_levels must be >= 1");
  require(window_radius >= 1, ErrorCode::kInvalidArgument, "window_radius must be >= 1");
  require(iterations_per_level >= 1, ErrorCode::kInvalidArgument,
          "iterations_per_level must be >= 1");
  require(min_eigen_threshold >= 0.0, ErrorCode::kInvalidArgument,
          "min_eigen_threshold must be >= 0");
}

FrameSequence::FrameSequence(std::vector<Frame> frames) : frames_(std::move(frames)) {
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    require(frames_[i].minutes > frames_[i - 1].minutes, ErrorCode::kInvalidArgument,
            "frame timestamps must be strictly increasing");
    require_same_shape(frames_[0].grid, frames_[i].grid, "frame sequence");
  }
}

FlowField estimate_flow(const Grid& prev, const Grid& next, const FlowParams& p) {
  p.validate();
  require_same_shape(prev, next, "estimate_flow");
  const int min_side = 1 << (p.pyramid_levels - 1);
  require(prev.height() >= min_side && prev.width() >= min_side,
          ErrorCode::kInvalidArgument,
          "grid too small for " + std::to_string(p.pyramid_levels) + " pyramid levels");

  std::vector<Grid> prev_pyr{prev};
  std::vector<Grid> next_pyr{next};
  for (int l = 1; l < p.pyramid_levels; ++l) {
    prev_pyr.push_back(box_downsample(prev_pyr.back(), 2));
    next_pyr.push_back(box_downsample(next_pyr.back(), 2));
  }

  std::vector<double> dx, dy;
  std::vector<char> degenerate;
  for (int l = p.pyramid_levels - 1; l >= 0; --l) {
    const int h = prev_pyr[l].height();
    const int w = prev_pyr[l].width();
    if (dx.empty()) {
      dx.assign(static_cast<std::size_t>(h) * w, 0.0);
      dy.assign(static_cast<std::size_t>(h) * w, 0.0);
    } else {
      const int ch = prev_pyr[l + 1].height();
      const int cw = prev_pyr[l + 1].width();
      std::vector<float> fx(dx.begin(), dx.end()), fy(dy.begin(), dy.end());
      const Grid ux = resample_bilinear(Grid(ch, cw, std::move(fx)), h, w);
      const Grid uy = resample_bilinear(Grid(ch, cw, std::move(fy)), h, w);
      dx.resize(ux.size());
      dy.resize(uy.size());
      for (std::size_t i = 0; i < ux.size(); ++i) {
        dx[i] = 2.0 * ux[i];
        dy[i] = 2.0 * uy[i];
      }
    }
    refine_level(prev_pyr[l], next_pyr[l], p, dx, dy, degenerate);
  }

  std::vector<float> out_x(dx.size()), out_y(dy.size());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const bool keep = !degenerate[i] && std::isfinite(dx[i]) && std::isfinite(dy[i]);
    out_x[i] = keep ? static_cast<float>(dx[i]) : 0.0f;
    out_y[i] = keep ? static_cast<float>(dy[i]) : 0.0f;
  }
  return FlowField(Grid(prev.height(), prev.width(), std::move(out_x)),
                   Grid(prev.height(), prev.width(), std::move(out_y)));
}

Grid warp(const Grid& src, const FlowField& f, double scale) {
  require(src.height() == f.height() && src.width() == f.width(),
          ErrorCode::kDimensionMismatch, "warp: flow and grid dimensions differ");
  require(std::isfinite(scale), ErrorCode::kInvalidArgument, "warp: non-finite scale");
  const int h = src.height();
  const int w = src.width();
  std::vector<float> out(src.size());
  parallel_for(h, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        out[i] = static_cast<float>(src.sample(static_cast<double>(y) + scale * f.dy()[i],
                                               x + scale * f.dx()[i]));
      }
  });
  return Grid(h, w, std::move(out));
}

Grid interpolate_with_flow(const Grid& prev, const Grid& next, const FlowField& f,
                           double t) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::kInvalidArgument,
          "interpolation fraction t must lie in [0,1]");
  require_same_shape(prev, next, "interpolate");
  // A feature at p in prev sits at p + t*f(p) in the intermediate frame.
  const Grid from_prev = warp(prev, f, -t);
  const Grid from_next = warp(next, f, 1.0 - t);
  std::vector<float> out(prev.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>((1.0 - t) * from_prev[i] + t * from_next[i]);
  return clamp01(prev.height(), prev.width(), out);
}

Grid interpolate(const Grid& prev, const Grid& next, double t, const FlowParams& p) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::kInvalidArgument,
          "interpolation fraction t must lie in [0,1]");
  return interpolate_with_flow(prev, next, estimate_flow(prev, next, p), t);
}

std::vector<CadenceSlot> plan_cadence(const std::vector<double>& source_minutes,
                                      double step) {
  require(step > 0.0 && std::isfinite(step), ErrorCode::kInvalidArgument,
          "cadence step must be > 0");
  require(source_minutes.size() >= 2, ErrorCode::kInvalidArgument,
          "cadence resampling needs at least 2 source frames");
  const double t0 = source_minutes.front();
  const double tn = source_minutes.back();
  std::vector<CadenceSlot> slots;
  std::size_t left = 0;
  for (long k = 0;; ++k) {
    const double target = t0 + static_cast<double>(k) * step;
    if (target > tn + kTimeEps) break;
    while (left + 1 < source_minutes.size() &&
           source_minutes[left + 1] <= target + kTimeEps)
      ++left;
    if (std::abs(source_minutes[left] - target) <= kTimeEps) {
      slots.push_back({source_minutes[left], left, 0.0});
      continue;
    }
    const double a = source_minutes[left];
    const double b = source_minutes[left + 1];
    slots.push_back({target, left, (target - a) / (b - a)});
  }
  return slots;
}

FrameSequence resample_cadence(const FrameSequence& seq, double step,
                               const FlowParams& p) {
  std::vector<double> minutes;
  for (const auto& f : seq.frames()) minutes.push_back(f.minutes);
  const auto slots = plan_cadence(minutes, step);
  std::map<std::size_t, FlowField> flows;
  std::vector<Frame> out;
  for (const auto& s : slots) {
    if (s.local_t == 0.0) {
      out.push_back({s.minutes, seq[s.left].grid});
      continue;
    }
    auto it = flows.find(s.left);
    if (it == flows.end())
      it = flows.emplace(s.left, estimate_flow(seq[s.left].grid, seq[s.left + 1].grid, p))
               .first;
    out.push_back({s.minutes, interpolate_with_flow(seq[s.left].grid,
                                                    seq[s.left + 1].grid, it->second,
                                                    s.local_t)});
  }
  return FrameSequence(std::move(out));
}

}  // namespace nowfuse
