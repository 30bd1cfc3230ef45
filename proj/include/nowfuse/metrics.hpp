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

#ifndef NOWFUSE_METRICS_HPP_
#define NOWFUSE_METRICS_HPP_

#include "nowfuse/blend.hpp"
#include "nowfuse/grid.hpp"

namespace nowfuse {

// Reports cap the infinite PSNR of identical grids at this value.
inline constexpr double kPsnrCap = 100.0;

// 10 log10(range^2 / MSE); +infinity when the grids are identical.
double psnr(const Grid& a, const Grid& b, double data_range = 1.0);
inline double capped_psnr(double db) { return db > kPsnrCap ? kPsnrCap : db; }

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;

  void validate() const;
};

// Mean of the local SSIM map over all fully-contained Gaussian windows.
double ssim(const Grid& a, const Grid& b, const SsimParams& p = {});

// Mean squared finite difference of g across the band, over band pixels.
// The across-band direction is the dominant orientation of the alpha map's
// gradient in a 3x3 neighbourhood, which is well defined on both sides of a
// ridge or valley.
double seam_energy(const Grid& g, const AlphaMap& band);

}  // namespace nowfuse

#endif  // NOWFUSE_METRICS_HPP_
