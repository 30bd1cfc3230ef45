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

#include "nowfuse/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nowfuse/io.hpp"
#include "nowfuse/parallel.hpp"
#include "nowfuse/random.hpp"

namespace nowfuse {

namespace {

struct Blob {
  double cx, cy, sigma, amplitude;
};

std::string item_name(std::size_t index, const char* part) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "item_%05zu_%s.nfg", index, part);
  return buf;
}

}  // namespace

void SceneSpec::validate() const {
  require(height >= 32 && width >= 32, ErrorCode::kInvalidArgument,
          "scene dimensions must be >= 32");
  require(n_blobs >= 1, ErrorCode::kInvalidArgument, "scene needs at least one blob");
  require(sigma_min > 0.0 && sigma_max >= sigma_min, ErrorCode::kInvalidArgument,
          "blob sigma range must satisfy 0 < min <= max");
  require(intensity_min >= 0.0 && intensity_max >= intensity_min,
          ErrorCode::kInvalidArgument, "blob intensity range must satisfy 0 <= min <= max");
  require(std::isfinite(vx) && std::isfinite(vy) && std::isfinite(rotation),
          ErrorCode::kInvalidArgument, "non-finite scene velocity");
}

void SensorSpec::validate() const {
  require(radar_noise >= 0.0 && sat_blur >= 0.0, ErrorCode::kInvalidArgument,
          "sensor sigmas must be >= 0");
  require(sat_factor >= 1, ErrorCode::kInvalidArgument, "satellite factor must be >= 1");
  require(sat_gain > 0.0 && sat_gain <= 1.5, ErrorCode::kInvalidArgument,
          "satellite gain must lie in (0, 1.5]");
  require(std::isfinite(sat_bias), ErrorCode::kInvalidArgument, "non-finite satellite bias");
  coverage.validate();
}

CoverageGeometry default_coverage(int height, int width) {
  const double side = std::min(height, width);
  CoverageGeometry cov;
  cov.ramp_width = 16.0 * side / 256.0;
  cov.radars.push_back({0.5 * (width - 1), 0.5 * (height - 1), 0.375 * side});
  return cov;
}

FrameSequence gen_sequence(const SceneSpec& spec, int n_frames, double dt_minutes) {
  spec.validate();
  require(n_frames >= 1, ErrorCode::kInvalidArgument, "need at least one frame");
  require(dt_minutes > 0.0, ErrorCode::kInvalidArgument, "frame spacing must be > 0");
  CounterRng rng(derive_seed(spec.seed, 0x5343454e45ULL));
  const double margin = spec.sigma_max;
  std::vector<Blob> blobs;
  for (int k = 0; k < spec.n_blobs; ++k) {
    Blob b{};
    b.cx = rng.uniform(-margin, spec.width - 1 + margin);
    b.cy = rng.uniform(-margin, spec.height - 1 + margin);
    b.sigma = rng.uniform(spec.sigma_min, spec.sigma_max);
    b.amplitude = rng.uniform(spec.intensity_min, spec.intensity_max);
    blobs.push_back(b);
  }
  const double gx = 0.5 * (spec.width - 1);
  const double gy = 0.5 * (spec.height - 1);
  std::vector<Frame> frames;
  for (int f = 0; f < n_frames; ++f) {
    const double angle = spec.rotation * f;
    const double ca = std::cos(angle), sa = std::sin(angle);
    std::vector<Blob> moved = blobs;
    for (auto& b : moved) {
      const double rx = b.cx - gx, ry = b.cy - gy;
      b.cx = gx + ca * rx - sa * ry + spec.vx * f;
      b.cy = gy + sa * rx + ca * ry + spec.vy * f;
    }
    std::vector<float> v(static_cast<std::size_t>(spec.height) * spec.width);
    parallel_for(spec.height, [&](std::size_t y0, std::size_t y1) {
      for (std::size_t y = y0; y < y1; ++y)
        for (int x = 0; x < spec.width; ++x) {
          double acc = 0.0;
          for (const auto& b : moved) {
            const double dx = x - b.cx, dy = static_cast<double>(y) - b.cy;
            acc += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
          }
          v[y * spec.width + x] = static_cast<float>(std::min(1.0, acc));
        }
    });
    frames.push_back({f * dt_minutes, Grid(spec.height, spec.width, std::move(v))});
  }
  return FrameSequence(std::move(frames));
}

Grid radar_view(const Grid& truth, const SensorSpec& s, std::uint64_t seed) {
  s.validate();
  const std::uint64_t key = derive_seed(seed, 0x5241444152ULL);
  std::vector<float> v(truth.size());
  for (int y = 0; y < truth.height(); ++y)
    for (int x = 0; x < truth.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * truth.width() + x;
      if (!s.coverage.covers(y, x)) {
        v[i] = 0.0f;
        continue;
      }
      const double noisy = truth[i] + s.radar_noise * standard_normal(key, i);
      v[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
  return Grid(truth.height(), truth.width(), std::move(v));
}

Grid satellite_view(const Grid& truth, const SensorSpec& s, std::uint64_t) {
  s.validate();
  const Grid blurred = gaussian_blur(truth, s.sat_blur);
  std::vector<float> v(truth.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<float>(s.sat_gain * blurred[i] + s.sat_bias);
  const Grid biased(truth.height(), truth.width(), std::move(v));
  const Grid coarse = box_downsample(biased, s.sat_factor);
  return clamp01(resample_bilinear(coarse, truth.height(), truth.width()));
}

TrainingSetSpec default_training_spec(int height, int width) {
  TrainingSetSpec spec;
  spec.scene.height = height;
  spec.scene.width = width;
  spec.sensor.coverage = default_coverage(height, width);
  spec.band = default_coverage(height, width);
  return spec;
}

SynthItem make_training_item(const TrainingSetSpec& spec, std::uint64_t seed,
                             std::size_t index) {
  require(spec.band.radars.size() == 1, ErrorCode::kInvalidArgument,
          "training band geometry must have exactly one site");
  require(spec.band_jitter >= 0.0 && spec.band_jitter < 1.0, ErrorCode::kInvalidArgument,
          "band jitter must lie in [0,1)");
  const std::uint64_t item_seed = derive_seed(seed, 0x49540000ULL + index);
  SceneSpec scene = spec.scene;
  scene.seed = derive_seed(item_seed, 1);
  const Grid truth = gen_sequence(scene, 1, 1.0)[0].grid;
  const Grid target = satellite_view(truth, spec.sensor);

  CounterRng rng(derive_seed(item_seed, 2));
  CoverageGeometry band = spec.band;
  Radar& r = band.radars[0];
  const double j = spec.band_jitter;
  r.cx += rng.uniform(-j, j) * r.radius;
  r.cy += rng.uniform(-j, j) * r.radius;
  r.radius *= 1.0 + rng.uniform(-j, j);
  band.validate();

  AlphaMap alpha = build_alpha_training(band, target.height(), target.width());
  NoiseSpec noise = spec.noise;
  noise.seed = derive_seed(item_seed, 3);
  const Grid n = noise_field(noise, target.height(), target.width());
  Grid corrupted = corrupt(target, alpha, n);
  return SynthItem{std::move(corrupted),
                   inference_mask(alpha, MaskMode::kBinary),
                   inference_mask(alpha, MaskMode::kSemi),
                   inference_mask(alpha, MaskMode::kAlpha),
                   target,
                   std::move(alpha)};
}

std::vector<SynthItem> make_training_items(const TrainingSetSpec& spec, std::uint64_t seed,
                                           std::size_t n_items, std::size_t first) {
  std::vector<SynthItem> items;
  items.reserve(n_items);
  for (std::size_t k = 0; k < n_items; ++k)
    items.push_back(make_training_item(spec, seed, first + k));
  return items;
}

std::vector<TrainingItem> to_training_items(const std::vector<SynthItem>& items,
                                            MaskMode mode) {
  std::vector<TrainingItem> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    const MaskGrid& m = mode == MaskMode::kBinary ? it.mask_binary
                        : mode == MaskMode::kSemi ? it.mask_semi
                                                  : it.mask_alpha;
    out.push_back({it.corrupted, m, it.target});
  }
  return out;
}

std::string make_training_set(const TrainingSetSpec& spec, std::uint64_t seed,
                              std::size_t n_items, const std::filesystem::path& out_dir) {
  require(n_items >= 1, ErrorCode::kInvalidArgument, "need at least one item");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec && std::filesystem::is_directory(out_dir), ErrorCode::kIo,
          "cannot create output directory " + out_dir.string());
  std::string manifest;
  for (std::size_t k = 0; k < n_items; ++k) {
    const SynthItem item = make_training_item(spec, seed, k);
    const std::pair<const char*, const Grid*> parts[] = {
        {"corrupted", &item.corrupted},           {"mask_binary", &item.mask_binary.grid()},
        {"mask_semi", &item.mask_semi.grid()},    {"mask_alpha", &item.mask_alpha.grid()},
        {"target", &item.target}};
    for (std::size_t p = 0; p < std::size(parts); ++p) {
      const std::string name = item_name(k, parts[p].first);
      write_grid(*parts[p].second, out_dir / name);
      manifest += name;
      manifest += p + 1 < std::size(parts) ? ' ' : '\n';
    }
  }
  write_text_atomic(out_dir / "manifest.txt", manifest);
  return manifest;
}

std::vector<TrainingItem> load_training_set(const std::filesystem::path& dir, MaskMode mode) {
  std::ifstream in(dir / "manifest.txt");
  require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot open " + (dir / "manifest.txt").string());
  std::vector<TrainingItem> items;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string names[5];
    if (!(ls >> names[0])) continue;
    for (int i = 1; i < 5; ++i)
      require(static_cast<bool>(ls >> names[i]), ErrorCode::kFormat,
              "manifest line needs five file names");
    const int mi = mode == MaskMode::kBinary ? 1 : mode == MaskMode::kSemi ? 2 : 3;
    items.push_back({read_grid(dir / names[0]), MaskGrid(read_grid(dir / names[mi])),
                     read_grid(dir / names[4])});
  }
  require(!items.empty(), ErrorCode::kFormat, "manifest lists no items");
  return items;
}

TrainingSetSpec parse_synth_spec(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;
    require(static_cast<bool>(ls >> value) && !(ls >> extra), ErrorCode::kFormat,
            "spec line " + std::to_string(lineno) + ": expected 'key value'");
    require(kv.emplace(key, value).second, ErrorCode::kFormat,
            "spec line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }

  auto num = [&](const std::string& key, double& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return false;
    std::size_t used = 0;
    try {
      out = std::stod(it->second, &used);
    } catch (...) {
      used = 0;
    }
    require(used == it->second.size() && std::isfinite(out), ErrorCode::kFormat,
            "spec key '" + key + "': not a number: " + it->second);
    kv.erase(it);
    return true;
  };
  auto integer = [&](const std::string& key, int& out) {
    double v = 0.0;
    if (!num(key, v)) return;
    require(v == std::floor(v) && std::abs(v) < 1e9, ErrorCode::kFormat,
            "spec key '" + key + "': not an integer");
    out = static_cast<int>(v);
  };

  int height = 64, width = 64;
  integer("height", height);
  integer("width", width);
  TrainingSetSpec spec = default_training_spec(height, width);
  SceneSpec& s = spec.scene;
  integer("n_blobs", s.n_blobs);
  num("sigma_min", s.sigma_min);
  num("sigma_max", s.sigma_max);
  num("intensity_min", s.intensity_min);
  num("intensity_max", s.intensity_max);
  num("vx", s.vx);
  num("vy", s.vy);
  num("rotation", s.rotation);
  SensorSpec& sensor = spec.sensor;
  num("radar_noise", sensor.radar_noise);
  num("sat_blur", sensor.sat_blur);
  integer("sat_factor", sensor.sat_factor);
  num("sat_gain", sensor.sat_gain);
  num("sat_bias", sensor.sat_bias);
  Radar& r = spec.band.radars[0];
  num("band_cx", r.cx);
  num("band_cy", r.cy);
  num("band_radius", r.radius);
  num("band_ramp", spec.band.ramp_width);
  num("band_jitter", spec.band_jitter);
  num("noise_sigma", spec.noise.smooth_sigma);
  if (auto it = kv.find("noise"); it != kv.end()) {
    if (it->second == "uniform") {
      spec.noise.kind = NoiseKind::kUniform;
    } else if (it->second == "smoothed") {
      spec.noise.kind = NoiseKind::kGaussianSmoothed;
    } else {
      fail(ErrorCode::kFormat, "spec key 'noise' must be uniform or smoothed");
    }
    kv.erase(it);
  }
  require(kv.empty(), ErrorCode::kFormat,
          kv.empty() ? "" : "unknown spec key '" + kv.begin()->first + "'");
  s.validate();
  sensor.validate();
  spec.band.validate();
  return spec;
}

TrainingSetSpec read_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

}  // namespace nowfuse
