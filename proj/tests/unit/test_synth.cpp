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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nowfuse/io.hpp"
#include "nowfuse/synth.hpp"
#include "support/oracles.hpp"

namespace nowfuse {
namespace {

SceneSpec scene(std::uint64_t seed, double vx = 0.0, double vy = 0.0) {
  SceneSpec s;
  s.seed = seed;
  s.vx = vx;
  s.vy = vy;
  return s;
}

TEST(Sequence, SameSeedIsIdentical) {
  const auto a = gen_sequence(scene(1, 1.5, -0.5), 3, 5.0);
  const auto b = gen_sequence(scene(1, 1.5, -0.5), 3, 5.0);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].grid, b[k].grid);
    EXPECT_EQ(a[k].minutes, 5.0 * k);
  }
  EXPECT_FALSE(gen_sequence(scene(2), 1, 5.0)[0].grid == a[0].grid);
}

TEST(Sequence, ZeroVelocityFreezesTheField) {
  const auto s = gen_sequence(scene(3), 4, 1.0);
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_EQ(s[k].grid, s[0].grid);
}

TEST(Sequence, UniformVelocityTranslatesTheField) {
  const auto s = gen_sequence(scene(4, 2.0, 0.0), 4, 1.0);
  const int h = s[0].grid.height(), w = s[0].grid.width();
  for (int k = 1; k < 4; ++k) {
    const int shift = 2 * k;
    std::vector<float> moved, now;
    for (int y = 4; y < h - 4; ++y)
      for (int x = shift + 4; x < w - 4; ++x) {
        moved.push_back(s[0].grid(y, x - shift));
        now.push_back(s[k].grid(y, x));
      }
    const int n = static_cast<int>(moved.size());
    const double p = testing::reference_psnr(Grid(1, n, moved), Grid(1, n, now));
    EXPECT_GT(p, 40.0) << "frame " << k;
  }
}

TEST(Sequence, ValuesStayInUnitRange) {
  SceneSpec s = scene(5);
  s.n_blobs = 40;
  s.intensity_min = 0.9;
  const Grid g = gen_sequence(s, 1, 1.0)[0].grid;
  for (float v : g.values()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(Sequence, InvalidScenesAreRejected) {
  SceneSpec s = scene(6);
  s.height = 16;
  EXPECT_THROW(gen_sequence(s, 1, 1.0), Error);
  s = scene(6);
  s.n_blobs = 0;
  EXPECT_THROW(gen_sequence(s, 1, 1.0), Error);
  EXPECT_THROW(gen_sequence(scene(6), 0, 1.0), Error);
}

TEST(Radar, ZeroNoiseMasksTruthToCoverage) {
  const Grid truth = gen_sequence(scene(7), 1, 1.0)[0].grid;
  SensorSpec s;
  s.radar_noise = 0.0;
  s.coverage = default_coverage(64, 64);
  const Grid r = radar_view(truth, s, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      ASSERT_EQ(r(y, x), s.coverage.covers(y, x) ? truth(y, x) : 0.0f);
}

TEST(Radar, NoiseStatistics) {
  const int side = 400;
  SensorSpec s;
  s.coverage.radars = {{side / 2.0, side / 2.0, side * 0.45}};
  s.radar_noise = 0.02;
  const Grid r = radar_view(Grid(side, side, 0.5f), s, 8);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      if (!s.coverage.covers(y, x)) {
        ASSERT_EQ(r(y, x), 0.0f);
        continue;
      }
      const double d = r(y, x) - 0.5;
      sum += d;
      sq += d * d;
      ++n;
    }
  ASSERT_GE(n, 100000u);
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.02, 0.002);
  EXPECT_NEAR(mean, 0.0, 0.001);
  EXPECT_FALSE(radar_view(Grid(side, side, 0.5f), s, 9) == r);
  EXPECT_EQ(radar_view(Grid(side, side, 0.5f), s, 8), r);
}

TEST(Satellite, IdentitySettingsReturnTruth) {
  const Grid truth = gen_sequence(scene(10), 1, 1.0)[0].grid;
  SensorSpec s;
  s.sat_gain = 1.0;
  s.sat_bias = 0.0;
  s.sat_blur = 0.0;
  s.sat_factor = 1;
  const Grid v = satellite_view(truth, s);
  for (std::size_t i = 0; i < truth.size(); ++i) ASSERT_NEAR(v.values()[i], truth.values()[i], 1e-6);
}

TEST(Satellite, ConstantMapsToGainTimesValuePlusBias) {
  SensorSpec s;
  const Grid v = satellite_view(Grid(64, 64, 0.4f), s);
  for (float x : v.values()) ASSERT_NEAR(x, 0.9 * 0.4 + 0.05, 1e-5);
}

TEST(Satellite, RemovesHighFrequencies) {
  SceneSpec sc = scene(11);
  sc.height = sc.width = 32;
  sc.sigma_min = 1.0;
  sc.sigma_max = 3.0;
  const Grid truth = gen_sequence(sc, 1, 1.0)[0].grid;
  SensorSpec s;
  s.coverage = default_coverage(32, 32);
  const Grid v = satellite_view(truth, s);
  EXPECT_LT(testing::high_frequency_energy(v, 4), testing::high_frequency_energy(truth, 4));
}

TEST(Satellite, InvalidSensorIsRejected) {
  SensorSpec s;
  s.coverage = default_coverage(64, 64);
  s.sat_gain = 2.0;
  EXPECT_THROW(satellite_view(Grid(64, 64, 0.1f), s), Error);
  s.sat_gain = 0.9;
  s.sat_factor = 0;
  EXPECT_THROW(satellite_view(Grid(64, 64, 0.1f), s), Error);
}

TEST(TrainingItems, TargetEqualsCorruptedOutsideTheBand) {
  const auto spec = default_training_spec();
  for (std::size_t k = 0; k < 5; ++k) {
    const SynthItem it = make_training_item(spec, 12, k);
    std::size_t band = 0;
    for (std::size_t i = 0; i < it.target.size(); ++i) {
      if (it.alpha.grid().values()[i] == 1.0f) {
        ASSERT_EQ(it.corrupted.values()[i], it.target.values()[i]);
        ASSERT_EQ(it.mask_binary.grid().values()[i], 1.0f);
        ASSERT_EQ(it.mask_semi.grid().values()[i], 1.0f);
        ASSERT_EQ(it.mask_alpha.grid().values()[i], 1.0f);
      } else {
        ++band;
        ASSERT_EQ(it.mask_binary.grid().values()[i], 0.0f);
        ASSERT_EQ(it.mask_semi.grid().values()[i], 0.5f);
        ASSERT_EQ(it.mask_alpha.grid().values()[i], it.alpha.grid().values()[i]);
      }
    }
    EXPECT_GT(band, 0u);
  }
}

TEST(TrainingItems, ItemsAreIndependentOfTheirNeighbours) {
  const auto spec = default_training_spec();
  const auto run = make_training_items(spec, 13, 4, 10);
  const SynthItem single = make_training_item(spec, 13, 12);
  EXPECT_EQ(run[2].corrupted, single.corrupted);
  EXPECT_EQ(run[2].target, single.target);
  EXPECT_FALSE(run[0].target == run[1].target);
}

TEST(TrainingItems, BandJitterMovesTheBand) {
  const auto spec = default_training_spec();
  EXPECT_FALSE(make_training_item(spec, 14, 0).alpha.grid() ==
               make_training_item(spec, 14, 1).alpha.grid());
  auto fixed = spec;
  fixed.band_jitter = 0.0;
  EXPECT_EQ(make_training_item(fixed, 14, 0).alpha.grid(), make_training_item(fixed, 14, 1).alpha.grid());
}

TEST(TrainingSet, FilesManifestAndReload) {
  testing::ScratchDir a("set_a"), b("set_b");
  const auto spec = default_training_spec();
  const std::string manifest = make_training_set(spec, 15, 3, a.path());
  make_training_set(spec, 15, 3, b.path());
  std::istringstream lines(manifest);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    std::istringstream ls(line);
    std::string name;
    int parts = 0;
    while (ls >> name) {
      ++parts;
      EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
    }
    EXPECT_EQ(parts, 5);
    ++count;
  }
  EXPECT_EQ(count, 3);
  EXPECT_EQ(read_file(a / "manifest.txt"), read_file(b / "manifest.txt"));

  const auto items = load_training_set(a.path(), MaskMode::kSemi);
  const SynthItem first = make_training_item(spec, 15, 0);
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].corrupted, first.corrupted);
  EXPECT_EQ(items[0].mask.grid(), first.mask_semi.grid());
  EXPECT_EQ(items[0].target, first.target);
}

TEST(TrainingSet, ErrorsAreReported) {
  testing::ScratchDir dir("set_err");
  try {
    load_training_set(dir.path(), MaskMode::kBinary);
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  std::ofstream(dir / "manifest.txt") << "only_one_name.nfg\n";
  EXPECT_THROW(load_training_set(dir.path(), MaskMode::kBinary), Error);
  std::ofstream(dir / "blocker") << "x";
  try {
    make_training_set(default_training_spec(), 1, 1, dir / "blocker" / "sub");
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(SynthSpec, ParsesKeysAndComments) {
  const auto s = parse_synth_spec(
      "# demo\nheight 32\nwidth 48\nn_blobs 5  # fewer\nsat_gain 1.1\nband_ramp 3\n"
      "noise smoothed\nnoise_sigma 1.5\n\n");
  EXPECT_EQ(s.scene.height, 32);
  EXPECT_EQ(s.scene.width, 48);
  EXPECT_EQ(s.scene.n_blobs, 5);
  EXPECT_DOUBLE_EQ(s.sensor.sat_gain, 1.1);
  EXPECT_DOUBLE_EQ(s.band.ramp_width, 3.0);
  EXPECT_EQ(s.noise.kind, NoiseKind::kGaussianSmoothed);
  EXPECT_DOUBLE_EQ(s.noise.smooth_sigma, 1.5);
  EXPECT_EQ(s.sensor.coverage.radars.size(), 1u);
}

TEST(SynthSpec, RejectsMalformedInput) {
  for (const char* text : {"colour red\n", "height 64\nheight 32\n", "height\n",
                           "height 64 65\n", "height abc\n", "height 40.5\n", "noise pink\n",
                           "height 16\n", "sat_gain 3\n"}) {
    try {
      parse_synth_spec(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kFormat || e.code() == ErrorCode::kInvalidArgument)
          << text;
    }
  }
}

}  // namespace
}  // namespace nowfuse
