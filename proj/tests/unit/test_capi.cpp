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

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nowfuse/nowfuse.h"
#include "support/oracles.hpp"

namespace {

using nowfuse::testing::ScratchDir;

// Owns one handle and releases it with the matching destroy function.
template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  operator const T*() const { return p; }
};
using Grid = Handle<nf_grid, nf_grid_destroy>;
using Model = Handle<nf_model, nf_model_destroy>;
using Coverage = Handle<nf_coverage, nf_coverage_destroy>;

std::vector<float> ramp(std::size_t n, float scale = 1.0f) {
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * static_cast<float>(i % 97) / 97.0f;
  return v;
}

void make_grid(Grid& g, uint32_t h, uint32_t w, float scale = 1.0f) {
  const auto v = ramp(static_cast<std::size_t>(h) * w, scale);
  ASSERT_EQ(nf_grid_create(h, w, 1, v.data(), g.out()), NF_OK) << nf_last_error();
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_GT(std::strlen(nf_version()), 0u);
  EXPECT_STREQ(nf_status_name(NF_OK), "ok");
  EXPECT_STREQ(nf_status_name(NF_ERR_IO), "i/o error");
  EXPECT_STREQ(nf_status_name(static_cast<nf_status>(42)), "unknown status");
}

TEST(CApi, GridCreateShapeAndData) {
  const std::vector<float> v = ramp(2 * 3 * 4);
  Grid g;
  ASSERT_EQ(nf_grid_create(3, 4, 2, v.data(), g.out()), NF_OK);
  uint32_t h = 0, w = 0, c = 0;
  ASSERT_EQ(nf_grid_shape(g, &h, &w, &c), NF_OK);
  EXPECT_EQ(h, 3u);
  EXPECT_EQ(w, 4u);
  EXPECT_EQ(c, 2u);
  EXPECT_EQ(std::memcmp(nf_grid_data(g), v.data(), v.size() * sizeof(float)), 0);
  EXPECT_EQ(nf_grid_data(nullptr), nullptr);
}

TEST(CApi, GridCreateRejectsBadInput) {
  const float one = 1.0f;
  Grid g;
  EXPECT_EQ(nf_grid_create(0, 4, 1, &one, g.out()), NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_grid_create(1, 1, 1, nullptr, g.out()), NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_grid_create(1, 1, 1, &one, nullptr), NF_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(nf_last_error()).find("NULL"), std::string::npos);
  const float nan = std::nanf("");
  EXPECT_EQ(nf_grid_create(1, 1, 1, &nan, g.out()), NF_ERR_NON_FINITE);
  EXPECT_EQ(g.p, nullptr);
}

TEST(CApi, GridFileRoundTripAndPng) {
  ScratchDir dir("capi_grid");
  Grid g, back;
  make_grid(g, 8, 5);
  const std::string path = (dir / "g.nfg").string();
  ASSERT_EQ(nf_grid_write(g, path.c_str()), NF_OK);
  ASSERT_EQ(nf_grid_read(path.c_str(), back.out()), NF_OK);
  EXPECT_EQ(std::memcmp(nf_grid_data(g), nf_grid_data(back), 40 * sizeof(float)), 0);
  const std::string png = (dir / "g.png").string();
  EXPECT_EQ(nf_grid_export_png(g, 0, png.c_str()), NF_OK);
  EXPECT_TRUE(std::filesystem::exists(png));
  EXPECT_EQ(nf_grid_export_png(g, 1, png.c_str()), NF_ERR_INVALID_ARGUMENT);
  Grid missing;
  EXPECT_EQ(nf_grid_read((dir / "nope.nfg").string().c_str(), missing.out()), NF_ERR_IO);
  std::ofstream(dir / "junk.nfg") << "not a grid";
  EXPECT_EQ(nf_grid_read((dir / "junk.nfg").string().c_str(), missing.out()), NF_ERR_FORMAT);
}

TEST(CApi, Coverage) {
  Coverage c;
  EXPECT_EQ(nf_coverage_parse("ramp 4\n32 32 20\n", c.out()), NF_OK);
  Coverage bad;
  EXPECT_EQ(nf_coverage_parse("32 32 20\n", bad.out()), NF_ERR_FORMAT);
  EXPECT_EQ(nf_coverage_default(0, 64, bad.out()), NF_ERR_INVALID_ARGUMENT);
  Coverage d;
  EXPECT_EQ(nf_coverage_default(64, 64, d.out()), NF_OK);
  ScratchDir dir("capi_cov");
  std::ofstream(dir / "c.txt") << "ramp 2\n10 10 5\n";
  Coverage f;
  EXPECT_EQ(nf_coverage_read((dir / "c.txt").string().c_str(), f.out()), NF_OK);
  EXPECT_EQ(nf_coverage_read((dir / "x.txt").string().c_str(), bad.out()), NF_ERR_IO);
}

TEST(CApi, FlowAndInterpolation) {
  Grid a, flow, mid;
  make_grid(a, 32, 32);
  nf_flow_params fp;
  nf_flow_params_default(&fp);
  EXPECT_GE(fp.pyramid_levels, 1);
  ASSERT_EQ(nf_flow_estimate(a, a, &fp, flow.out()), NF_OK);
  uint32_t c = 0;
  nf_grid_shape(flow, nullptr, nullptr, &c);
  EXPECT_EQ(c, 2u);
  for (std::size_t i = 0; i < 2 * 32 * 32; ++i) ASSERT_EQ(nf_grid_data(flow)[i], 0.0f);
  ASSERT_EQ(nf_interpolate(a, a, 0.5, nullptr, mid.out()), NF_OK);
  EXPECT_EQ(std::memcmp(nf_grid_data(mid), nf_grid_data(a), 32 * 32 * sizeof(float)), 0);

  Grid bad;
  EXPECT_EQ(nf_interpolate(a, a, 1.5, nullptr, bad.out()), NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_flow_estimate(a, flow, nullptr, bad.out()), NF_ERR_DIMENSION_MISMATCH);
  Grid small;
  make_grid(small, 16, 16);
  EXPECT_EQ(nf_flow_estimate(a, small, nullptr, bad.out()), NF_ERR_DIMENSION_MISMATCH);
  fp.window_radius = 0;
  EXPECT_EQ(nf_flow_estimate(a, a, &fp, bad.out()), NF_ERR_INVALID_ARGUMENT);
}

TEST(CApi, BlendModes) {
  Grid radar, sat, hard, alpha;
  make_grid(radar, 32, 32, 0.9f);
  make_grid(sat, 32, 32, 0.3f);
  Coverage cov;
  ASSERT_EQ(nf_coverage_parse("ramp 2\n15.5 15.5 100\n", cov.out()), NF_OK);
  ASSERT_EQ(nf_blend(radar, sat, cov, NF_BLEND_NONE, nullptr, NF_MASK_SEMI, hard.out()), NF_OK);
  EXPECT_EQ(std::memcmp(nf_grid_data(hard), nf_grid_data(radar), 32 * 32 * sizeof(float)), 0);
  ASSERT_EQ(nf_blend(radar, sat, cov, NF_BLEND_ALPHA, nullptr, NF_MASK_SEMI, alpha.out()), NF_OK);
  Grid bad;
  EXPECT_EQ(nf_blend(radar, sat, cov, NF_BLEND_INPAINT, nullptr, NF_MASK_SEMI, bad.out()),
            NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_blend(radar, sat, nullptr, NF_BLEND_ALPHA, nullptr, NF_MASK_SEMI, bad.out()),
            NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_blend(radar, sat, cov, static_cast<nf_blend_mode>(9), nullptr, NF_MASK_SEMI,
                     bad.out()),
            NF_ERR_INVALID_ARGUMENT);
  Grid small;
  make_grid(small, 16, 16);
  EXPECT_EQ(nf_blend(radar, small, cov, NF_BLEND_ALPHA, nullptr, NF_MASK_SEMI, bad.out()),
            NF_ERR_DIMENSION_MISMATCH);
}

void count_steps(int32_t, double loss, void* user) {
  if (std::isfinite(loss)) ++*static_cast<int*>(user);
}

TEST(CApi, SynthTrainInferEval) {
  ScratchDir dir("capi_train");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(nf_synth(nullptr, 4, 7, data.c_str()), NF_OK) << nf_last_error();
  EXPECT_EQ(nf_synth(nullptr, 0, 7, data.c_str()), NF_ERR_INVALID_ARGUMENT);

  nf_train_options o;
  nf_train_options_default(&o);
  EXPECT_EQ(o.mask_mode, NF_MASK_SEMI);
  EXPECT_EQ(o.lambda_hole, 6.0);
  const int32_t widths[] = {4, 8};
  o.channels = widths;
  o.n_channels = 2;
  o.steps = 3;
  o.batch_size = 2;
  o.mask_mode = NF_MASK_ALPHA;
  int seen = 0;
  o.progress = count_steps;
  o.progress_user = &seen;
  Model m;
  ASSERT_EQ(nf_train(data.c_str(), &o, m.out()), NF_OK) << nf_last_error();
  EXPECT_EQ(seen, 3);
  EXPECT_EQ(nf_model_loss_count(m), 3u);
  ASSERT_NE(nf_model_losses(m), nullptr);
  EXPECT_GT(nf_model_parameter_count(m), 0u);

  const std::string path = (dir / "m.nfw").string();
  ASSERT_EQ(nf_model_write(m, path.c_str()), NF_OK);
  Model loaded;
  ASSERT_EQ(nf_model_read(path.c_str(), loaded.out()), NF_OK);
  EXPECT_EQ(nf_model_parameter_count(loaded), nf_model_parameter_count(m));
  EXPECT_EQ(nf_model_loss_count(loaded), 0u);
  EXPECT_EQ(nf_model_losses(loaded), nullptr);

  Grid image, mask, out, out2;
  ASSERT_EQ(nf_grid_read((dir / "data" / "item_00000_corrupted.nfg").string().c_str(), image.out()),
            NF_OK);
  ASSERT_EQ(nf_grid_read((dir / "data" / "item_00000_mask_alpha.nfg").string().c_str(), mask.out()),
            NF_OK);
  ASSERT_EQ(nf_infer(m, image, mask, out.out()), NF_OK) << nf_last_error();
  ASSERT_EQ(nf_infer(loaded, image, mask, out2.out()), NF_OK);
  EXPECT_EQ(std::memcmp(nf_grid_data(out), nf_grid_data(out2), 64 * 64 * sizeof(float)), 0);

  nf_eval_result r;
  ASSERT_EQ(nf_eval(out, out, nullptr, &r), NF_OK);
  EXPECT_EQ(r.psnr, 100.0);
  EXPECT_EQ(r.ssim, 1.0);
  EXPECT_EQ(r.has_seam, 0);
  ASSERT_EQ(nf_eval(out, image, mask, &r), NF_OK) << nf_last_error();
  EXPECT_LT(r.psnr, 100.0);
  EXPECT_EQ(r.has_seam, 1);
  EXPECT_GE(r.seam, 0.0);

  Model none;
  EXPECT_EQ(nf_train((dir / "empty").string().c_str(), &o, none.out()), NF_ERR_IO);
  o.steps = 0;
  EXPECT_EQ(nf_train(data.c_str(), &o, none.out()), NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_model_read((dir / "missing.nfw").string().c_str(), none.out()), NF_ERR_IO);
}

TEST(CApi, TrainingDivergenceStillReturnsModel) {
  ScratchDir dir("capi_diverge");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(nf_synth(nullptr, 2, 1, data.c_str()), NF_OK);
  nf_train_options o;
  nf_train_options_default(&o);
  const int32_t widths[] = {2, 4};
  o.channels = widths;
  o.n_channels = 2;
  o.steps = 100;
  o.learning_rate = 1e38;
  Model m;
  const nf_status st = nf_train(data.c_str(), &o, m.out());
  if (st == NF_ERR_DIVERGED) {
    EXPECT_NE(m.p, nullptr);
    EXPECT_GT(std::strlen(nf_last_error()), 0u);
  } else {
    EXPECT_EQ(st, NF_OK);
  }
}

TEST(CApi, PipelineReport) {
  ScratchDir dir("capi_pipe");
  nf_pipeline_options o;
  nf_pipeline_options_default(&o);
  o.synth_spec_path = "";
  o.write_images = 0;
  const std::string out = (dir / "out").string();
  o.out_dir = out.c_str();
  char* report = nullptr;
  ASSERT_EQ(nf_pipeline_run(&o, &report), NF_OK) << nf_last_error();
  ASSERT_NE(report, nullptr);
  EXPECT_EQ(std::string(report).rfind("frames=4\n", 0), 0u) << report;
  nf_string_free(report);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.txt"));

  o.mode = NF_BLEND_INPAINT;
  EXPECT_EQ(nf_pipeline_run(&o, nullptr), NF_ERR_INVALID_ARGUMENT);
  o.mode = NF_BLEND_ALPHA;
  o.satellite_list = "sat.txt";
  EXPECT_EQ(nf_pipeline_run(&o, nullptr), NF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nf_pipeline_run(nullptr, nullptr), NF_ERR_INVALID_ARGUMENT);
}

}  // namespace
