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

#ifndef NOWFUSE_FLOW_HPP_
#define NOWFUSE_FLOW_HPP_

#include <cstddef>
#include <vector>

#include "nowfuse/grid.hpp"

namespace nowfuse {

// Coarse-to-fine dense Lucas-Kanade settings.
struct FlowParams {
  int pyramid_levels = 4;
  int window_radius = 7;
  int iterations_per_level = 3;
  // Threshold on the smallest eigenvalue of the window-averaged structure
  // tensor. Pixels below it are treated as textureless.
  double min_eigen_threshold = 1e-6;

  void validate() const;
};

struct Frame {
  double minutes;
  Grid grid;
};

// Frames with strictly increasing timestamps and equal dimensions.
class FrameSequence {
 public:
  explicit FrameSequence(std::vector<Frame> frames);

  const std::vector<Frame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }

 private:
  std::vector<Frame> frames_;
};

// Displacement per pixel of prev such that next(p + f(p)) ~= prev(p).
// Textureless pixels get zero flow.
FlowField estimate_flow(const Grid& prev, const Grid& next, const FlowParams& p = {});

// Backward warp: out(p) = src(p + scale * f(p)), bilinear, clamp-to-edge.
Grid warp(const Grid& src, const FlowField& f, double scale);

// Motion-compensated frame at fraction t in [0, 1] between prev and next.
Grid interpolate(const Grid& prev, const Grid& next, double t, const FlowParams& p = {});
// Same, reusing a flow already estimated from prev to next.
Grid interpolate_with_flow(const Grid& prev, const Grid& next, const FlowField& f,
                           double t);

// One output slot of a cadence conversion. Source frames that land exactly on
// a target have local_t == 0 and are passed through.
struct CadenceSlot {
  double minutes;
  std::size_t left;  // index of the bracketing source frame at or before minutes
  double local_t;
};

std::vector<CadenceSlot> plan_cadence(const std::vector<double>& source_minutes,
                                      double step);

FrameSequence resample_cadence(const FrameSequence& seq, double step,
                               const FlowParams& p = {});

}  // namespace nowfuse

#endif  // NOWFUSE_FLOW_HPP_
