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

#include "nowfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace nowfuse {

namespace {

// Valid-mode separable filter of a double image with kernel k.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k, int& oh, int& ow) {
  const int n = static_cast<int>(k.size());
  ow = w - n + 1;
  oh = h - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Grid& a, const Grid& b, double data_range) {
  require_same_shape(a, b, "psnr");
  require(data_range > 0.0, ErrorCode::kInvalidArgument, "psnr data range must be > 0");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

void SsimParams::validate() const {
  require(window >= 1 && window % 2 == 1, ErrorCode::kInvalidArgument,
          "ssim window must be odd and >= 1");
  require(sigma > 0.0 && data_range > 0.0, ErrorCode::kInvalidArgument,
          "ssim sigma and data range must be > 0");
}

double ssim(const Grid& a, const Grid& b, const SsimParams& p) {
  p.validate();
  require_same_shape(a, b, "ssim");
  require(a.height() >= p.window && a.width() >= p.window, ErrorCode::kInvalidArgument,
          "ssim: grid smaller than the window");
  std::vector<double> k(p.window);
  double ksum = 0.0;
  for (int i = 0; i < p.window; ++i) {
    const double d = i - p.window / 2;
    k[i] = std::exp(-0.5 * d * d / (p.sigma * p.sigma));
    ksum += k[i];
  }
  for (double& v : k) v /= ksum;

  const int h = a.height();
  const int w = a.width();
  const std::size_t n = a.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a[i];
    y[i] = b[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  int oh = 0, ow = 0;
  const auto mx = filter_valid(x, h, w, k, oh, ow);
  const auto my = filter_valid(y, h, w, k, oh, ow);
  const auto mxx = filter_valid(xx, h, w, k, oh, ow);
  const auto myy = filter_valid(yy, h, w, k, oh, ow);
  const auto mxy = filter_valid(xy, h, w, k, oh, ow);

  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double sx = mxx[i] - mx[i] * mx[i];
    const double sy = myy[i] - my[i] * my[i];
    const double sxy = mxy[i] - mx[i] * my[i];
    total += ((2.0 * (mx[i] * my[i]) + c1) * (2.0 * sxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double seam_energy(const Grid& g, const AlphaMap& band) {
  require_same_shape(g, band.grid(), "seam_energy");
  const int h = g.height();
  const int w = g.width();
  const Grid& a = band.grid();
  auto at = [&](int y, int x) {
    return static_cast<double>(a(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)));
  };
  std::vector<double> jxx(g.size()), jxy(g.size()), jyy(g.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (at(y, x + 1) - at(y, x - 1));
      const double gy = 0.5 * (at(y + 1, x) - at(y - 1, x));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      jxx[i] = gx * gx;
      jxy[i] = gx * gy;
      jyy[i] = gy * gy;
    }

  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!band.in_band(i)) continue;
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          const int xx = std::clamp(x + dx, 0, w - 1);
          const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
          sxx += jxx[j];
          sxy += jxy[j];
          syy += jyy[j];
        }
      double d2;
      if (sxx + syy > 0.0) {
        const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        const double nx = std::cos(theta), ny = std::sin(theta);
        const double d = 0.5 * (g.sample(y + ny, x + nx) - g.sample(y - ny, x - nx));
        d2 = d * d;
      } else {
        // No orientation available: fall back to the steepest direction.
        const double gx = 0.5 * (g.sample(y, x + 1.0) - g.sample(y, x - 1.0));
        const double gy = 0.5 * (g.sample(y + 1.0, x) - g.sample(y - 1.0, x));
        d2 = gx * gx + gy * gy;
      }
      total += d2;
      ++count;
    }
  require(count > 0, ErrorCode::kInvalidArgument, "seam_energy: the band is empty");
  return total / static_cast<double>(count);
}

}  // namespace nowfuse
