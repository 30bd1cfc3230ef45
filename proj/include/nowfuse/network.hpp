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

#ifndef NOWFUSE_NETWORK_HPP_
#define NOWFUSE_NETWORK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "nowfuse/pconv.hpp"

namespace nowfuse {

// Encoder-decoder (U-shaped) partial-convolution network.
//
// Encoder level l applies a stride-2 partial convolution with a rectifier.
// Decoder steps upsample activation and mask 2x (nearest), concatenate the
// skip activation of the matching encoder level, and apply a stride-1
// partial convolution with a leaky rectifier. A final 1x1 convolution maps
// back to the image channel count.
struct NetConfig {
  std::vector<int> channels{32, 64, 128, 256};
  std::vector<int> encoder_kernels{7, 5, 3, 3};
  int decoder_kernel = 3;
  double leaky_slope = 0.2;
  MaskRule rule = MaskRule::kSoft;
  int image_channels = 1;

  void validate() const;
  int levels() const { return static_cast<int>(channels.size()); }
};

template <typename T>
struct NetworkParams {
  // levels encoder layers, then levels decoder layers (deepest first), then
  // the 1x1 projection.
  std::vector<PConvLayer<T>> layers;

  int levels() const { return static_cast<int>((layers.size() - 1) / 2); }
  const PConvLayer<T>& encoder(int l) const { return layers[l]; }
  const PConvLayer<T>& decoder(int i) const { return layers[levels() + i]; }
  const PConvLayer<T>& projection() const { return layers.back(); }
  std::size_t parameter_count() const;
  // Recovers the architecture from layer shapes; throws if inconsistent.
  NetConfig config() const;
  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

template <typename To, typename From>
NetworkParams<To> params_cast(const NetworkParams<From>& p) {
  NetworkParams<To> out;
  for (const auto& l : p.layers) {
    PConvLayer<To> c;
    c.out_channels = l.out_channels;
    c.in_channels = l.in_channels;
    c.kernel_h = l.kernel_h;
    c.kernel_w = l.kernel_w;
    c.stride = l.stride;
    c.padding = l.padding;
    c.rule = l.rule;
    c.weights.assign(l.weights.begin(), l.weights.end());
    c.bias.assign(l.bias.begin(), l.bias.end());
    out.layers.push_back(std::move(c));
  }
  return out;
}

// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero bias.
template <typename T>
NetworkParams<T> init_params(const NetConfig& cfg, std::uint64_t seed);

template <typename T>
using NetworkGrad = std::vector<LayerGrad<T>>;

template <typename T>
NetworkGrad<T> zero_grad(const NetworkParams<T>& p);

// Activations and masks of every layer for one forward pass.
template <typename T>
struct NetTrace {
  std::vector<Tensor4<T>> inputs;       // per layer, after concatenation
  std::vector<Tensor4<T>> input_masks;  // per layer (per-channel for decoders)
  std::vector<Tensor4<T>> outputs;      // per layer, after activation
  std::vector<Tensor4<T>> output_masks;
};

// image and mask are batch x C x H x W and batch x 1 x H x W; H and W must
// be divisible by 2^levels.
template <typename T>
Tensor4<T> net_forward(const Tensor4<T>& image, const Tensor4<T>& mask,
                       const NetworkParams<T>& params, NetTrace<T>* trace = nullptr);

// Backpropagates dL/d(output) through a recorded pass, accumulating into grad.
template <typename T>
void net_backward(const NetworkParams<T>& params, const NetTrace<T>& trace,
                  const Tensor4<T>& d_output, NetworkGrad<T>& grad);

// out = m * input + (1 - m) * pred, with m broadcast across channels.
template <typename T>
Tensor4<T> composite(const Tensor4<T>& input, const Tensor4<T>& pred,
                     const Tensor4<T>& mask);

struct LossWeights {
  double hole = 6.0;
  double valid = 1.0;
  // Score the composited output instead of the raw network prediction.
  bool composited = false;
};

// valid * mean|pred - target| over m == 1 plus hole * mean|pred - target|
// over m < 1, pooled over the batch. Empty regions contribute 0.
template <typename T>
double masked_l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target,
                      const Tensor4<T>& mask, const LossWeights& w);

// dL/dpred of masked_l1_loss.
template <typename T>
Tensor4<T> masked_l1_loss_grad(const Tensor4<T>& pred, const Tensor4<T>& target,
                               const Tensor4<T>& mask, const LossWeights& w);

template <typename T>
struct Batch {
  Tensor4<T> input;   // corrupted image
  Tensor4<T> mask;    // network-input confidence, batch x 1 x H x W
  Tensor4<T> target;  // ground truth
};

template <typename T>
struct LossAndGrad {
  double loss;
  NetworkGrad<T> grad;
};

// Loss of the prediction (composited when w.composited) and its gradient
// w.r.t. every layer.
// Batch items are processed independently and reduced in item order, so the
// result does not depend on the worker count.
template <typename T>
LossAndGrad<T> loss_and_grad(const NetworkParams<T>& params, const Batch<T>& batch,
                             const LossWeights& w);

template <typename T>
double batch_loss(const NetworkParams<T>& params, const Batch<T>& batch,
                  const LossWeights& w);

}  // namespace nowfuse

#endif  // NOWFUSE_NETWORK_HPP_
