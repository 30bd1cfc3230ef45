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

#ifndef NOWFUSE_PCONV_HPP_
#define NOWFUSE_PCONV_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "nowfuse/grid.hpp"
#include "nowfuse/tensor.hpp"

namespace nowfuse {

// How a layer turns its input confidence into the next layer's confidence.
enum class MaskRule : std::uint8_t {
  kBinary = 0,  // 1 if any window pixel is trusted
  kSoft = 1,    // 1 if some window pixel is fully trusted, else the center value
  kNone = 2,    // plain convolution: the mask is ignored and treated as all ones
};

// Partial convolution over a confidence-weighted window:
//   y = W^T (X * M) / sum(M) + b   if sum(M) > 0,   0 otherwise.
// sum(M) runs over the spatial window of the channel-mean mask, so a
// single-channel mask is broadcast across input channels.
template <typename T>
struct PConvLayer {
  int out_channels = 1;
  int in_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int padding = 1;
  MaskRule rule = MaskRule::kSoft;
  std::vector<T> weights;  // out x in x kh x kw
  std::vector<T> bias;     // out

  static PConvLayer zeros(int out_ch, int in_ch, int kh, int kw, int stride, int padding,
                          MaskRule rule);
  void validate() const;
  int out_height(int h) const { return (h + 2 * padding - kernel_h) / stride + 1; }
  int out_width(int w) const { return (w + 2 * padding - kernel_w) / stride + 1; }
  std::size_t fan_in() const {
    return static_cast<std::size_t>(in_channels) * kernel_h * kernel_w;
  }
  T& weight(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) *
                       kernel_w + kx];
  }
  friend bool operator==(const PConvLayer&, const PConvLayer&) = default;
};

template <typename T>
struct PConvOutput {
  Tensor4<T> y;     // batch x out_channels x oh x ow
  Tensor4<T> mask;  // batch x 1 x oh x ow
};

template <typename T>
struct LayerGrad {
  std::vector<T> weights;
  std::vector<T> bias;

  static LayerGrad zeros_like(const PConvLayer<T>& l) {
    return {std::vector<T>(l.weights.size(), T(0)), std::vector<T>(l.bias.size(), T(0))};
  }
};

// mask is batch x 1 x h x w (broadcast) or batch x in_channels x h x w. It is
// ignored for MaskRule::kNone and may then be an empty tensor.
template <typename T>
PConvOutput<T> pconv_forward(const Tensor4<T>& x, const Tensor4<T>& mask,
                             const PConvLayer<T>& layer);

// Convenience form with one mask shared by every batch item.
template <typename T>
PConvOutput<T> pconv_forward(const Tensor4<T>& x, const MaskGrid& mask,
                             const PConvLayer<T>& layer);

// Accumulates dL/dW and dL/db into grad and returns dL/dx. The mask pathway
// carries no gradient.
template <typename T>
Tensor4<T> pconv_backward(const Tensor4<T>& x, const Tensor4<T>& mask,
                          const PConvLayer<T>& layer, const Tensor4<T>& dy,
                          LayerGrad<T>& grad);

// Single-window forms of the two update rules.
double mask_update_binary(std::span<const double> window);
double mask_update_soft(std::span<const double> window, double center);

Tensor4<float> to_mask_tensor(const MaskGrid& m, int batch = 1);

}  // namespace nowfuse

#endif  // NOWFUSE_PCONV_HPP_
