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
#include <cstdlib>

#include "nowfuse/flow.hpp"
#include "nowfuse/synth.hpp"
#include "support/oracles.hpp"

namespace nowfuse {
namespace {

using testing::random_blobs;
using testing::reference_psnr;
using testing::render_blobs;

constexpr int kSide = 64;

struct ScopedThreads {
  explicit ScopedThreads(const char* n) { setenv("NOWFUSE_THREADS", n, 1); }
  ~ScopedThreads() { unsetenv("NOWFUSE_THREADS"); }
};

double interior_mean(const Grid& g, int margin) {
  double s = 0.0;
  int n = 0;
  for (int y = margin; y < g.height() - margin; ++y)
    for (int x = margin; x < g.width() - margin; ++x) {
      s += g(y, x);
      ++n;
    }
  return s / n;
}

TEST(Flow, IdenticalFramesGiveZeroFlow) {
  const Grid g = render_blobs(kSide, kSide, random_blobs(6, kSide, kSide, 1));
  const FlowField f = estimate_flow(g, g);
  for (float v : f.dx().values()) EXPECT_EQ(v, 0.0f);
  for (float v : f.dy().values()) EXPECT_EQ(v, 0.0f);
}

TEST(Flow, FeaturelessPairGivesZeroFlow) {
  const FlowField f = estimate_flow(Grid(kSide, kSide, 0.4f), Grid(kSide, kSide, 0.6f));
  for (float v : f.dx().values()) EXPECT_EQ(v, 0.0f);
  for (float v : f.dy().values()) EXPECT_EQ(v, 0.0f);
}

class FlowTranslation : public ::testing::TestWithParam<std::pair<double, double>> {};

TEST_P(FlowTranslation, RecoversGlobalShiftWithinQuarterPixel) {
  const auto [dx, dy] = GetParam();
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto blobs = random_blobs(10, kSide, kSide, seed);
    const Grid prev = render_blobs(kSide, kSide, blobs);
    const Grid next = render_blobs(kSide, kSide, blobs, dy, dx);
    const FlowField f = estimate_flow(prev, next);
    // Textureless pixels report zero by contract; score the rest and
    // require that they cover most of the interior.
    double sx = 0.0, sy = 0.0;
    int n = 0, total = 0;
    for (int y = 12; y < kSide - 12; ++y)
      for (int x = 12; x < kSide - 12; ++x, ++total) {
        if (f.dx()(y, x) == 0.0f && f.dy()(y, x) == 0.0f) continue;
        sx += f.dx()(y, x);
        sy += f.dy()(y, x);
        ++n;
      }
    ASSERT_GE(2 * n, total) << "seed " << seed;
    EXPECT_NEAR(sx / n, dx, 0.25) << "seed " << seed;
    EXPECT_NEAR(sy / n, dy, 0.25) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Shifts, FlowTranslation,
                         ::testing::Values(std::pair{3.0, 0.0}, std::pair{0.0, -2.0},
                                           std::pair{2.5, 1.5}, std::pair{-4.0, 3.0}));

TEST(Flow, SyntheticSceneShiftInteriorMean) {
  // Many faint, unsaturated blobs: textured over the whole interior.
  SceneSpec scene;
  scene.seed = 21;
  scene.n_blobs = 16;
  scene.sigma_min = 6.0;
  scene.sigma_max = 10.0;
  scene.intensity_min = 0.1;
  scene.intensity_max = 0.3;
  scene.vx = 3.0;
  const FrameSequence seq = gen_sequence(scene, 2, 1.0);
  const FlowField f = estimate_flow(seq[0].grid, seq[1].grid);
  EXPECT_NEAR(interior_mean(f.dx(), 12), 3.0, 0.25);
  EXPECT_NEAR(interior_mean(f.dy(), 12), 0.0, 0.25);
}

TEST(Flow, Errors) {
  const Grid a(kSide, kSide, 0.5f);
  EXPECT_THROW(estimate_flow(a, Grid(kSide, kSide + 1, 0.5f)), Error);
  FlowParams deep;
  deep.pyramid_levels = 8;  // needs 128 px per side
  EXPECT_THROW(estimate_flow(a, a, deep), Error);
  FlowParams bad;
  bad.window_radius = 0;
  EXPECT_THROW(estimate_flow(a, a, bad), Error);
  bad = {};
  bad.pyramid_levels = 0;
  EXPECT_THROW(estimate_flow(a, a, bad), Error);
}

TEST(Flow, ResultIndependentOfWorkerCount) {
  const auto blobs = random_blobs(10, kSide, kSide, 8);
  const Grid prev = render_blobs(kSide, kSide, blobs);
  const Grid next = render_blobs(kSide, kSide, blobs, 1.0, 2.0);
  FlowField one(1, 1), four(1, 1);
  {
    ScopedThreads t("1");
    one = estimate_flow(prev, next);
  }
  {
    ScopedThreads t("4");
    four = estimate_flow(prev, next);
  }
  EXPECT_EQ(one.dx(), four.dx());
  EXPECT_EQ(one.dy(), four.dy());
}

TEST(Warp, ZeroScaleIsIdentityAndConstantsStayConstant) {
  const Grid g = testing::random_grid(16, 16, 2);
  const FlowField f(testing::random_grid(16, 16, 3, -3, 3), testing::random_grid(16, 16, 4, -3, 3));
  EXPECT_EQ(warp(g, f, 0.0), g);
  const Grid warped = warp(Grid(16, 16, 0.7f), f, 1.3);
  for (float v : warped.values()) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(Warp, UniformFlowShiftsRampOneColumn) {
  std::vector<float> ramp(25);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) ramp[y * 5 + x] = static_cast<float>(x);
  const Grid g(5, 5, ramp);
  const FlowField f(Grid(5, 5, 1.0f), Grid(5, 5, 0.0f));
  const Grid out = warp(g, f, 1.0);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_FLOAT_EQ(out(y, x), x + 1.0f);
}

TEST(Interpolate, EndpointsAreExact) {
  const auto blobs = random_blobs(8, kSide, kSide, 11);
  const Grid a = render_blobs(kSide, kSide, blobs);
  const Grid b = render_blobs(kSide, kSide, blobs, 0.0, 3.0);
  EXPECT_EQ(interpolate(a, b, 0.0), a);
  EXPECT_EQ(interpolate(a, b, 1.0), b);
}

TEST(Interpolate, IdenticalFramesAreFixed) {
  const Grid a = render_blobs(kSide, kSide, random_blobs(8, kSide, kSide, 12));
  for (double t : {0.1, 0.5, 0.9}) EXPECT_EQ(interpolate(a, a, t), a);
}

TEST(Interpolate, HalfStepOfTranslatedBlobsBeatsThirtyDb) {
  const auto blobs = random_blobs(10, kSide, kSide, 21);
  const Grid a = render_blobs(kSide, kSide, blobs);
  const Grid b = render_blobs(kSide, kSide, blobs, 0.0, 4.0);
  const Grid truth = render_blobs(kSide, kSide, blobs, 0.0, 2.0);
  const Grid mid = interpolate(a, b, 0.5);
  EXPECT_GT(reference_psnr(mid, truth), 30.0);
  // Plain cross-fading is visibly worse, so the flow is doing the work.
  std::vector<float> fade(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) fade[i] = 0.5f * (a[i] + b[i]);
  EXPECT_GT(reference_psnr(mid, truth), reference_psnr(Grid(kSide, kSide, fade), truth));
}

TEST(Interpolate, RejectsOutOfRangeT) {
  const Grid a(kSide, kSide, 0.5f);
  EXPECT_THROW(interpolate(a, a, -0.01), Error);
  EXPECT_THROW(interpolate(a, a, 1.01), Error);
  EXPECT_THROW(interpolate(a, a, std::nan("")), Error);
}

TEST(Cadence, FifteenToTenMinutes) {
  const auto slots = plan_cadence({0.0, 15.0, 30.0}, 10.0);
  ASSERT_EQ(slots.size(), 4u);
  EXPECT_DOUBLE_EQ(slots[0].minutes, 0.0);
  EXPECT_DOUBLE_EQ(slots[1].minutes, 10.0);
  EXPECT_EQ(slots[1].left, 0u);
  EXPECT_NEAR(slots[1].local_t, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(slots[2].minutes, 20.0);
  EXPECT_EQ(slots[2].left, 1u);
  EXPECT_NEAR(slots[2].local_t, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(slots[3].minutes, 30.0);
  EXPECT_EQ(slots[3].local_t, 0.0);
}

TEST(Cadence, SingleIntervalFiveMinuteStep) {
  const auto slots = plan_cadence({0.0, 15.0}, 5.0);
  ASSERT_EQ(slots.size(), 4u);
  EXPECT_NEAR(slots[1].local_t, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(slots[2].local_t, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(slots[3].minutes, 15.0);
}

TEST(Cadence, AlignedStepIsIdentity) {
  std::vector<Frame> frames;
  for (int i = 0; i < 3; ++i)
    frames.push_back({15.0 * i, testing::random_grid(16, 16, 30 + i)});
  const FrameSequence seq(frames);
  const FrameSequence out = resample_cadence(seq, 15.0);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].minutes, seq[i].minutes);
    EXPECT_EQ(out[i].grid, seq[i].grid);
  }
}

TEST(Cadence, InterpolatedFramesMatchDirectInterpolation) {
  const auto blobs = random_blobs(10, kSide, kSide, 40);
  std::vector<Frame> frames;
  for (int i = 0; i < 3; ++i)
    frames.push_back({15.0 * i, render_blobs(kSide, kSide, blobs, 0.0, 3.0 * i)});
  const FrameSequence out = resample_cadence(FrameSequence(frames), 10.0);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[1].grid, interpolate(frames[0].grid, frames[1].grid, 2.0 / 3.0));
  EXPECT_EQ(out[2].grid, interpolate(frames[1].grid, frames[2].grid, 1.0 / 3.0));
  EXPECT_EQ(out[3].grid, frames[2].grid);
}

TEST(Cadence, Errors) {
  EXPECT_THROW(plan_cadence({0.0, 15.0}, 0.0), Error);
  EXPECT_THROW(plan_cadence({0.0, 15.0}, -5.0), Error);
  EXPECT_THROW(plan_cadence({0.0}, 5.0), Error);
  const Grid g(8, 8, 0.5f);
  EXPECT_THROW(FrameSequence({{0.0, g}, {0.0, g}}), Error);
  EXPECT_THROW(FrameSequence({{5.0, g}, {0.0, g}}), Error);
  EXPECT_THROW(FrameSequence({{0.0, g}, {5.0, Grid(8, 9, 0.5f)}}), Error);
}

}  // namespace
}  // namespace nowfuse
