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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "nowfuse/io.hpp"
#include "nowfuse/synth.hpp"
#include "support/oracles.hpp"

namespace nowfuse {
namespace {

using testing::ScratchDir;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult cli(const ScratchDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + NOWFUSE_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, UsageErrorsExitWithTwo) {
  ScratchDir dir("cli_usage");
  EXPECT_EQ(cli(dir, "").code, 2);
  EXPECT_EQ(cli(dir, "frobnicate").code, 2);
  EXPECT_EQ(cli(dir, "synth --n 2").code, 2);  // --out missing
  EXPECT_EQ(cli(dir, "synth --n 0 --out x").code, 2);
  EXPECT_EQ(cli(dir, "eval --a missing.nfg --b missing.nfg").code, 2);
  EXPECT_EQ(cli(dir, "train --data " + q(dir.path()) + " --mode purple --out m.nfw").code, 2);
  write_grid(Grid(8, 8, 0.5f), dir / "g.nfg");
  EXPECT_EQ(cli(dir, "interp --prev " + q(dir / "g.nfg") + " --next " + q(dir / "g.nfg") +
                         " --t 1.5 --out o.nfg")
                .code,
            2);
  std::ofstream(dir / "cov.txt") << "ramp 2\n4 4 3\n";
  const CliResult r = cli(dir, "blend --radar " + q(dir / "g.nfg") + " --sat " + q(dir / "g.nfg") +
                             " --coverage " + q(dir / "cov.txt") + " --mode inpaint --out o.nfg");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--model"), std::string::npos);
}

TEST(Cli, HelpExitsWithZero) {
  ScratchDir dir("cli_help");
  const CliResult r = cli(dir, "--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"synth", "flow", "interp", "blend", "train", "infer", "eval", "pipeline",
                          "export-png"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, RuntimeFailuresExitWithOne) {
  ScratchDir dir("cli_runtime");
  write_grid(Grid(8, 8, 0.5f), dir / "a.nfg");
  write_grid(Grid(9, 9, 0.5f), dir / "b.nfg");
  CliResult r = cli(dir, "eval --a " + q(dir / "a.nfg") + " --b " + q(dir / "b.nfg"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("dimension mismatch"), std::string::npos) << r.err;
  std::ofstream(dir / "junk.nfg") << "junk";
  EXPECT_EQ(cli(dir, "eval --a " + q(dir / "junk.nfg") + " --b " + q(dir / "a.nfg")).code, 1);
  EXPECT_EQ(cli(dir, "train --data " + q(dir.path()) + " --out m.nfw").code, 1);
}

TEST(Cli, EvalPrintsMetrics) {
  ScratchDir dir("cli_eval");
  write_grid(testing::random_grid(16, 16, 1), dir / "a.nfg");
  const CliResult r = cli(dir, "eval --a " + q(dir / "a.nfg") + " --b " + q(dir / "a.nfg"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "psnr=100\nssim=1\n");
}

TEST(Cli, EndToEndSubcommands) {
  ScratchDir dir("cli_e2e");
  const auto data = dir / "data";
  ASSERT_EQ(cli(dir, "synth --n 3 --seed 4 --out " + q(data)).code, 0);
  EXPECT_EQ(slurp(data / "manifest.txt"),
            make_training_set(default_training_spec(), 4, 3, dir / "ref"));
  EXPECT_EQ(read_file(data / "item_00002_target.nfg"), read_file(dir / "ref" / "item_00002_target.nfg"));

  const auto img = data / "item_00000_corrupted.nfg";
  const auto tgt = data / "item_00000_target.nfg";
  const auto msk = data / "item_00000_mask_semi.nfg";
  const auto alpha = data / "item_00000_mask_alpha.nfg";
  EXPECT_EQ(cli(dir, "flow --prev " + q(tgt) + " --next " + q(tgt) + " --out " + q(dir / "f.nfg")).code, 0);
  EXPECT_EQ(read_field(dir / "f.nfg").channels, 2u);
  EXPECT_EQ(cli(dir, "interp --prev " + q(tgt) + " --next " + q(img) + " --t 0 --out " +
                         q(dir / "i.nfg"))
                .code,
            0);
  EXPECT_EQ(read_grid(dir / "i.nfg"), read_grid(tgt));

  CliResult r = cli(dir, "train --data " + q(data) + " --mode semi --steps 4 --batch 2 --channels 4,8 --log " +
                       q(dir / "curve.txt") + " --out " + q(dir / "m.nfw"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string curve = slurp(dir / "curve.txt");
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 4);
  EXPECT_EQ(curve.rfind("1 ", 0), 0u);

  EXPECT_EQ(cli(dir, "infer --model " + q(dir / "m.nfw") + " --image " + q(img) + " --mask " + q(msk) +
                         " --out " + q(dir / "y.nfg"))
                .code,
            0);
  r = cli(dir, "eval --a " + q(dir / "y.nfg") + " --b " + q(tgt) + " --band " + q(alpha));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("seam="), std::string::npos);

  std::ofstream(dir / "cov.txt") << "ramp 4\n31.5 31.5 24\n";
  EXPECT_EQ(cli(dir, "blend --radar " + q(tgt) + " --sat " + q(img) + " --coverage " + q(dir / "cov.txt") +
                         " --mode inpaint --model " + q(dir / "m.nfw") + " --mask-mode semi --out " +
                         q(dir / "b.nfg"))
                .code,
            0);
  EXPECT_EQ(cli(dir, "export-png --in " + q(dir / "b.nfg") + " --out " + q(dir / "b.png")).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "b.png"));
  EXPECT_EQ(cli(dir, "export-png --in " + q(dir / "f.nfg") + " --channel 2 --out " + q(dir / "x.png")).code,
            1);

  r = cli(dir, "pipeline --mode inpaint --model " + q(dir / "m.nfw") + " --no-images --out " +
                   q(dir / "pipe"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir / "pipe" / "report.txt"));
  EXPECT_NE(r.out.find("t0030.seam_inpaint="), std::string::npos);
}

}  // namespace
}  // namespace nowfuse
