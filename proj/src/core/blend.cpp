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

#include "nowfuse/blend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nowfuse/random.hpp"

namespace nowfuse {

namespace {

template <typename Fn>
AlphaMap build_alpha(const CoverageGeometry& cov, int height, int width, AlphaKind kind,
                     float init, Fn&& per_radar) {
  cov.validate();
  std::vector<float> v(static_cast<std::size_t>(height) * width, init);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      float& out = v[static_cast<std::size_t>(y) * width + x];
      for (const auto& r : cov.radars) {
        const double d = std::hypot(x - r.cx, y - r.cy);
        out = per_radar(out, d, r);
      }
    }
  return AlphaMap(UnitGrid<AlphaTag>(Grid(height, width, std::move(v))), kind);
}

void require_same_alpha_shape(const Grid& g, const AlphaMap& a, const char* what) {
  require_same_shape(g, a.grid(), what);
}

}  // namespace

void CoverageGeometry::validate() const {
  require(ramp_width > 0.0 && std::isfinite(ramp_width), ErrorCode::kInvalidArgument,
          "ramp width must be > 0");
  for (const auto& r : radars) {
    require(std::isfinite(r.cx) && std::isfinite(r.cy) && std::isfinite(r.radius),
            ErrorCode::kInvalidArgument, "non-finite radar geometry");
    require(r.radius > 0.0, ErrorCode::kInvalidArgument, "radar radius must be > 0");
    require(ramp_width < r.radius, ErrorCode::kInvalidArgument,
            "ramp width must be smaller than every radar radius");
  }
}

bool CoverageGeometry::covers(double y, double x) const {
  return std::any_of(radars.begin(), radars.end(), [&](const Radar& r) {
    return std::hypot(x - r.cx, y - r.cy) <= r.radius;
  });
}

CoverageGeometry parse_coverage(const std::string& text) {
  CoverageGeometry cov;
  bool have_ramp = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    const std::string where = "coverage line " + std::to_string(lineno);
    if (first == "ramp") {
      require(!have_ramp, ErrorCode::kFormat, where + ": duplicate ramp header");
      require(static_cast<bool>(ls >> cov.ramp_width), ErrorCode::kFormat,
              where + ": expected 'ramp <width>'");
      have_ramp = true;
    } else {
      Radar r{};
      try {
        r.cx = std::stod(first);
      } catch (...) {
        fail(ErrorCode::kFormat, where + ": expected 'cx cy radius'");
      }
      require(static_cast<bool>(ls >> r.cy >> r.radius), ErrorCode::kFormat,
              where + ": expected 'cx cy radius'");
      cov.radars.push_back(r);
    }
    std::string extra;
    require(!(ls >> extra), ErrorCode::kFormat, where + ": trailing tokens");
  }
  require(have_ramp, ErrorCode::kFormat, "coverage file is missing the 'ramp <w>' header");
  cov.validate();
  return cov;
}

CoverageGeometry read_coverage(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_coverage(ss.str());
}

std::string format_coverage(const CoverageGeometry& cov) {
  std::ostringstream out;
  out.precision(17);
  out << "ramp " << cov.ramp_width << "\n";
  for (const auto& r : cov.radars) out << r.cx << " " << r.cy << " " << r.radius << "\n";
  return out.str();
}

bool AlphaMap::in_band(std::size_t i) const {
  const float a = values_[i];
  return kind_ == AlphaKind::kTraining ? a < 1.0f : (a > 0.0f && a < 1.0f);
}

AlphaMap build_alpha_inference(const CoverageGeometry& cov, int height, int width) {
  const double w = cov.ramp_width;
  return build_alpha(cov, height, width, AlphaKind::kInference, 0.0f,
                     [w](float acc, double d, const Radar& r) {
                       const double a = std::clamp((r.radius - d) / w, 0.0, 1.0);
                       return std::max(acc, static_cast<float>(a));
                     });
}

AlphaMap build_alpha_training(const CoverageGeometry& cov, int height, int width) {
  const double half = 0.5 * cov.ramp_width;
  return build_alpha(cov, height, width, AlphaKind::kTraining, 1.0f,
                     [half](float acc, double d, const Radar& r) {
                       const double centerline = r.radius - half;
                       const double a = std::min(1.0, std::abs(d - centerline) / half);
                       return std::min(acc, static_cast<float>(a));
                     });
}

Grid alpha_blend(const Grid& i1, const Grid& i2, const AlphaMap& a) {
  require_same_shape(i1, i2, "alpha_blend");
  require_same_alpha_shape(i1, a, "alpha_blend");
  std::vector<float> out(i1.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double al = a[k];
    out[k] = static_cast<float>(al * i1[k] + (1.0 - al) * i2[k]);
  }
  return Grid(i1.height(), i1.width(), std::move(out));
}

Grid corrupt(const Grid& i, const AlphaMap& a, const Grid& n) {
  require_same_shape(i, n, "corrupt");
  require_same_alpha_shape(i, a, "corrupt");
  std::vector<float> out(i.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double keep = std::abs(1.0 - 2.0 * static_cast<double>(a[k]));
    out[k] = static_cast<float>(keep * i[k] + (1.0 - keep) * n[k]);
  }
  return Grid(i.height(), i.width(), std::move(out));
}

Grid hard_composite(const Grid& radar, const Grid& satellite, const CoverageGeometry& cov) {
  require_same_shape(radar, satellite, "hard_composite");
  std::vector<float> out(radar.size());
  for (int y = 0; y < radar.height(); ++y)
    for (int x = 0; x < radar.width(); ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * radar.width() + x;
      out[k] = cov.covers(y, x) ? radar[k] : satellite[k];
    }
  return Grid(radar.height(), radar.width(), std::move(out));
}

Grid noise_field(const NoiseSpec& spec, int height, int width) {
  const std::uint64_t key = derive_seed(spec.seed, 0x4e4f495345ULL);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(uniform01(key, i));
  Grid g(height, width, std::move(v));
  if (spec.kind == NoiseKind::kUniform) return g;

  require(spec.smooth_sigma > 0.0, ErrorCode::kInvalidArgument,
          "smoothed noise needs smooth_sigma > 0");
  const Grid smooth = gaussian_blur(g, spec.smooth_sigma);
  const auto [lo, hi] = std::minmax_element(smooth.values().begin(), smooth.values().end());
  const double lo_v = *lo, span = static_cast<double>(*hi) - *lo;
  std::vector<float> out(n, 0.0f);
  if (span > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      out[i] = static_cast<float>(std::clamp((smooth[i] - lo_v) / span, 0.0, 1.0));
  return Grid(height, width, std::move(out));
}

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "binary") return MaskMode::kBinary;
  if (s == "semi") return MaskMode::kSemi;
  if (s == "alpha") return MaskMode::kAlpha;
  fail(ErrorCode::kInvalidArgument, "unknown mask mode '" + s + "'");
}

const char* to_string(MaskMode m) {
  switch (m) {
    case MaskMode::kBinary: return "binary";
    case MaskMode::kSemi: return "semi";
    case MaskMode::kAlpha: return "alpha";
  }
  return "?";
}

MaskGrid inference_mask(const AlphaMap& a, MaskMode mode) {
  std::vector<float> m(a.size(), 1.0f);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!a.in_band(i)) continue;
    switch (mode) {
      case MaskMode::kBinary: m[i] = 0.0f; break;
      case MaskMode::kSemi: m[i] = 0.5f; break;
      case MaskMode::kAlpha:
        m[i] = a.kind() == AlphaKind::kTraining
                   ? a[i]
                   : static_cast<float>(std::abs(1.0 - 2.0 * static_cast<double>(a[i])));
        break;
    }
  }
  return MaskGrid(Grid(a.height(), a.width(), std::move(m)));
}

}  // namespace nowfuse
