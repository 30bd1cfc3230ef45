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

// nowfuse command-line front end. Talks to the library only through the C
// interface in nowfuse/nowfuse.h.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nowfuse/nowfuse.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeFailure {
  int code = kExitRuntime;
};

struct GridDeleter {
  void operator()(nf_grid* g) const { nf_grid_destroy(g); }
};
struct ModelDeleter {
  void operator()(nf_model* m) const { nf_model_destroy(m); }
};
struct CoverageDeleter {
  void operator()(nf_coverage* c) const { nf_coverage_destroy(c); }
};
using GridPtr = std::unique_ptr<nf_grid, GridDeleter>;
using ModelPtr = std::unique_ptr<nf_model, ModelDeleter>;
using CoveragePtr = std::unique_ptr<nf_coverage, CoverageDeleter>;

std::string g_command;

void check(nf_status st) {
  if (st == NF_OK) return;
  std::fprintf(stderr, "nowfuse %s: %s: %s\n", g_command.c_str(), nf_status_name(st),
               nf_last_error());
  throw RuntimeFailure{};
}

GridPtr load_grid(const std::string& path) {
  nf_grid* g = nullptr;
  check(nf_grid_read(path.c_str(), &g));
  return GridPtr(g);
}

ModelPtr load_model(const std::string& path) {
  nf_model* m = nullptr;
  check(nf_model_read(path.c_str(), &m));
  return ModelPtr(m);
}

const std::map<std::string, nf_blend_mode> kBlendModes{
    {"none", NF_BLEND_NONE}, {"alpha", NF_BLEND_ALPHA}, {"inpaint", NF_BLEND_INPAINT}};
const std::map<std::string, nf_mask_mode> kMaskModes{
    {"binary", NF_MASK_BINARY}, {"semi", NF_MASK_SEMI}, {"alpha", NF_MASK_ALPHA}};

struct FlowOpts {
  nf_flow_params p{};
  FlowOpts() { nf_flow_params_default(&p); }
  void add(CLI::App* cmd) {
    cmd->add_option("--levels", p.pyramid_levels, "Pyramid levels")
        ->check(CLI::Range(1, 12))->capture_default_str();
    cmd->add_option("--radius", p.window_radius, "Lucas-Kanade window radius")
        ->check(CLI::Range(1, 64))->capture_default_str();
    cmd->add_option("--iters", p.iterations_per_level, "Refinement iterations per level")
        ->check(CLI::Range(1, 100))->capture_default_str();
    cmd->add_option("--min-eigen", p.min_eigen_threshold,
                    "Smallest structure-tensor eigenvalue treated as textured")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nowfuse: radar/satellite precipitation fusion in time and space"};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.require_subcommand(0, 1);

  std::string out, spec, prev, next, radar, sat, coverage, model, image, mask, data, a, b, band;
  std::string sat_list, radar_list, log_path, in_path;
  std::uint64_t seed = 0;
  std::uint32_t n_items = 0, channel = 0;
  double t = 0.5;
  std::string mode = "alpha", mask_mode = "semi", train_mode = "semi";
  FlowOpts flow_opts, interp_opts;

  nf_train_options topt;
  nf_train_options_default(&topt);
  std::vector<std::int32_t> channels;
  int progress_every = 0;

  nf_pipeline_options popt;
  nf_pipeline_options_default(&popt);
  bool no_images = false;

  auto* synth = app.add_subcommand("synth", "Write a synthetic training set");
  synth->add_option("--spec", spec, "Spec file of 'key value' lines (default spec if omitted)")
      ->check(CLI::ExistingFile);
  synth->add_option("--n", n_items, "Number of items")->required()->check(CLI::Range(1u, 1u << 24));
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();

  auto* flow = app.add_subcommand("flow", "Estimate dense optical flow between two grids");
  flow->add_option("--prev", prev, "Earlier grid")->required()->check(CLI::ExistingFile);
  flow->add_option("--next", next, "Later grid")->required()->check(CLI::ExistingFile);
  flow->add_option("--out", out, "Output 2-channel flow grid")->required();
  flow_opts.add(flow);

  auto* interp = app.add_subcommand("interp", "Interpolate a frame between two grids");
  interp->add_option("--prev", prev, "Earlier grid")->required()->check(CLI::ExistingFile);
  interp->add_option("--next", next, "Later grid")->required()->check(CLI::ExistingFile);
  interp->add_option("--t", t, "Fractional position in [0, 1]")
      ->required()->check(CLI::Range(0.0, 1.0));
  interp->add_option("--out", out, "Output grid")->required();
  interp_opts.add(interp);

  auto* blend = app.add_subcommand("blend", "Fuse a radar grid with a satellite grid");
  blend->add_option("--radar", radar, "Radar grid")->required()->check(CLI::ExistingFile);
  blend->add_option("--sat", sat, "Satellite grid")->required()->check(CLI::ExistingFile);
  blend->add_option("--coverage", coverage, "Coverage file")->required()->check(CLI::ExistingFile);
  blend->add_option("--mode", mode, "none, alpha or inpaint")
      ->check(CLI::IsMember({"none", "alpha", "inpaint"}))->capture_default_str();
  blend->add_option("--model", model, "Weights file (inpaint mode)")->check(CLI::ExistingFile);
  blend->add_option("--mask-mode", mask_mode, "Inpainting mask: binary, semi or alpha")
      ->check(CLI::IsMember({"binary", "semi", "alpha"}))->capture_default_str();
  blend->add_option("--out", out, "Output grid")->required();

  auto* train = app.add_subcommand("train", "Train an inpainting network");
  train->add_option("--data", data, "Directory written by 'synth'")
      ->required()->check(CLI::ExistingDirectory);
  train->add_option("--mode", train_mode, "Mask type: binary, semi or alpha")
      ->check(CLI::IsMember({"binary", "semi", "alpha"}))->capture_default_str();
  train->add_option("--steps", topt.steps, "Optimizer steps")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", topt.seed, "Random seed")->capture_default_str();
  train->add_option("--out", out, "Output weights file")->required();
  train->add_option("--lr", topt.learning_rate, "Learning rate")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch", topt.batch_size, "Batch size")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lambda-hole", topt.lambda_hole, "Loss weight inside the hole")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--lambda-valid", topt.lambda_valid, "Loss weight on valid pixels")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--channels", channels, "Encoder widths, e.g. 32,64,128,256")
      ->delimiter(',')->check(CLI::PositiveNumber);
  train->add_option("--log", log_path, "Write the training curve ('step loss' lines)");
  train->add_option("--progress", progress_every, "Print the loss every N steps to stderr")
      ->check(CLI::NonNegativeNumber);

  auto* infer = app.add_subcommand("infer", "Inpaint a grid with a trained network");
  infer->add_option("--model", model, "Weights file")->required()->check(CLI::ExistingFile);
  infer->add_option("--image", image, "Input grid")->required()->check(CLI::ExistingFile);
  infer->add_option("--mask", mask, "Mask grid")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", out, "Output grid")->required();

  auto* eval = app.add_subcommand("eval", "Compare two grids (PSNR, SSIM, seam energy)");
  eval->add_option("--a", a, "First grid")->required()->check(CLI::ExistingFile);
  eval->add_option("--b", b, "Second grid")->required()->check(CLI::ExistingFile);
  eval->add_option("--band", band, "Training alpha map; pixels < 1 form the seam band")
      ->check(CLI::ExistingFile);

  auto* pipeline = app.add_subcommand("pipeline", "Run temporal and spatial fusion end to end");
  auto* spec_opt = pipeline->add_option("--spec", spec, "Synthetic scene spec file")
                       ->check(CLI::ExistingFile);
  auto* sat_opt = pipeline->add_option("--sat-list", sat_list, "Satellite 'minutes path' list")
                      ->check(CLI::ExistingFile);
  auto* radar_opt = pipeline->add_option("--radar-list", radar_list, "Radar 'minutes path' list")
                        ->check(CLI::ExistingFile);
  spec_opt->excludes(sat_opt)->excludes(radar_opt);
  sat_opt->needs(radar_opt);
  radar_opt->needs(sat_opt);
  pipeline->add_option("--coverage", coverage, "Coverage file (default: centered radar)")
      ->check(CLI::ExistingFile);
  pipeline->add_option("--mode", mode, "none, alpha or inpaint")
      ->check(CLI::IsMember({"none", "alpha", "inpaint"}))->capture_default_str();
  pipeline->add_option("--model", model, "Weights file (inpaint mode)")->check(CLI::ExistingFile);
  pipeline->add_option("--mask-mode", mask_mode, "Inpainting mask: binary, semi or alpha")
      ->check(CLI::IsMember({"binary", "semi", "alpha"}))->capture_default_str();
  pipeline->add_option("--step", popt.cadence_step, "Output cadence in minutes")
      ->check(CLI::PositiveNumber)->capture_default_str();
  pipeline->add_option("--sat-cadence", popt.satellite_cadence,
                       "Synthetic satellite cadence in minutes")
      ->check(CLI::PositiveNumber)->capture_default_str();
  pipeline->add_option("--duration", popt.duration, "Synthetic sequence length in minutes")
      ->check(CLI::PositiveNumber)->capture_default_str();
  pipeline->add_option("--seed", popt.seed, "Random seed")->capture_default_str();
  pipeline->add_flag("--no-images", no_images, "Skip PNG renders");
  pipeline->add_option("--out", out, "Output directory")->required();

  auto* export_png = app.add_subcommand("export-png", "Render one grid channel as a PNG");
  export_png->add_option("--in", in_path, "Input grid")->required()->check(CLI::ExistingFile);
  export_png->add_option("--channel", channel, "Channel index")->capture_default_str();
  export_png->add_option("--out", out, "Output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    std::fputs(app.help().c_str(), stderr);
    return kExitUsage;
  }
  g_command = app.get_subcommands().front()->get_name();
  if ((*blend || *pipeline) && mode == "inpaint" && model.empty()) {
    std::fprintf(stderr, "nowfuse %s: --mode inpaint requires --model\n", g_command.c_str());
    return kExitUsage;
  }

  try {
    if (*synth) {
      check(nf_synth(spec.empty() ? nullptr : spec.c_str(), n_items, seed, out.c_str()));
    } else if (*flow) {
      const auto p = load_grid(prev), n = load_grid(next);
      nf_grid* f = nullptr;
      check(nf_flow_estimate(p.get(), n.get(), &flow_opts.p, &f));
      const GridPtr held(f);
      check(nf_grid_write(f, out.c_str()));
    } else if (*interp) {
      const auto p = load_grid(prev), n = load_grid(next);
      nf_grid* g = nullptr;
      check(nf_interpolate(p.get(), n.get(), t, &interp_opts.p, &g));
      const GridPtr held(g);
      check(nf_grid_write(g, out.c_str()));
    } else if (*blend) {
      const auto r = load_grid(radar), s = load_grid(sat);
      nf_coverage* c = nullptr;
      check(nf_coverage_read(coverage.c_str(), &c));
      const CoveragePtr cov(c);
      ModelPtr m;
      if (!model.empty()) m = load_model(model);
      nf_grid* g = nullptr;
      check(nf_blend(r.get(), s.get(), c, kBlendModes.at(mode), m.get(), kMaskModes.at(mask_mode),
                     &g));
      const GridPtr held(g);
      check(nf_grid_write(g, out.c_str()));
    } else if (*train) {
      topt.mask_mode = kMaskModes.at(train_mode);
      if (!channels.empty()) {
        topt.channels = channels.data();
        topt.n_channels = channels.size();
      }
      if (progress_every > 0) {
        topt.progress = [](std::int32_t step, double loss, void* user) {
          const int every = *static_cast<int*>(user);
          if ((step + 1) % every == 0)
            std::fprintf(stderr, "step %d loss %.6f\n", static_cast<int>(step + 1), loss);
        };
        topt.progress_user = &progress_every;
      }
      nf_model* m = nullptr;
      const nf_status st = nf_train(data.c_str(), &topt, &m);
      const ModelPtr held(m);
      // A diverged run still hands back its last finite checkpoint.
      if (m != nullptr) {
        const nf_status wst = nf_model_write(m, out.c_str());
        if (!log_path.empty()) {
          std::string text;
          const double* losses = nf_model_losses(m);
          for (std::size_t i = 0; i < nf_model_loss_count(m); ++i)
            text += std::to_string(i + 1) + " " + fmt(losses[i]) + "\n";
          std::ofstream(log_path, std::ios::binary) << text;
        }
        check(st);
        check(wst);
      } else {
        check(st);
      }
    } else if (*infer) {
      const auto m = load_model(model);
      const auto img = load_grid(image), msk = load_grid(mask);
      nf_grid* g = nullptr;
      check(nf_infer(m.get(), img.get(), msk.get(), &g));
      const GridPtr held(g);
      check(nf_grid_write(g, out.c_str()));
    } else if (*eval) {
      const auto ga = load_grid(a), gb = load_grid(b);
      GridPtr gband;
      if (!band.empty()) gband = load_grid(band);
      nf_eval_result r{};
      check(nf_eval(ga.get(), gb.get(), gband.get(), &r));
      std::printf("psnr=%s\nssim=%s\n", fmt(r.psnr).c_str(), fmt(r.ssim).c_str());
      if (r.has_seam) std::printf("seam=%s\n", fmt(r.seam).c_str());
    } else if (*pipeline) {
      if (!spec.empty()) popt.synth_spec_path = spec.c_str();
      if (!sat_list.empty()) {
        popt.satellite_list = sat_list.c_str();
        popt.radar_list = radar_list.c_str();
      }
      if (!coverage.empty()) popt.coverage_path = coverage.c_str();
      popt.mode = kBlendModes.at(mode);
      if (!model.empty()) popt.model_path = model.c_str();
      popt.mask_mode = kMaskModes.at(mask_mode);
      popt.write_images = no_images ? 0 : 1;
      popt.out_dir = out.c_str();
      char* report = nullptr;
      check(nf_pipeline_run(&popt, &report));
      std::fputs(report, stdout);
      nf_string_free(report);
    } else if (*export_png) {
      const auto g = load_grid(in_path);
      check(nf_grid_export_png(g.get(), channel, out.c_str()));
    }
  } catch (const RuntimeFailure& f) {
    return f.code;
  }
  return kExitOk;
}
