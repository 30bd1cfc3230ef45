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

#include "nowfuse/network.hpp"

#include <cmath>
#include <string>

#include "nowfuse/parallel.hpp"
#include "nowfuse/random.hpp"

namespace nowfuse {

namespace {

std::string layer_name(int index, int levels) {
  if (index < levels) return "encoder" + std::to_string(index);
  if (index < 2 * levels) return "decoder" + std::to_string(index - levels);
  return "projection";
}

template <typename T>
void check_finite(const Tensor4<T>& t, int index, int levels, const char* what) {
  if (!t.all_finite())
    fail(ErrorCode::kNonFinite, std::string("non-finite ") + what + " in layer " + layer_name(index, levels));
}

template <typename T>
std::vector<PConvLayer<T>> layer_shapes(const NetConfig& cfg) {
  const int levels = cfg.levels();
  std::vector<PConvLayer<T>> layers;
  for (int l = 0; l < levels; ++l) {
    const int in = l == 0 ? cfg.image_channels : cfg.channels[l - 1];
    const int k = cfg.encoder_kernels[l];
    layers.push_back(PConvLayer<T>::zeros(cfg.channels[l], in, k, k, 2, k / 2, cfg.rule));
  }
  for (int j = levels - 1; j >= 0; --j) {
    const int skip = j == 0 ? cfg.image_channels : cfg.channels[j - 1];
    const int out = j >= 1 ? cfg.channels[j - 1] : cfg.channels[0];
    const int k = cfg.decoder_kernel;
    layers.push_back(
        PConvLayer<T>::zeros(out, cfg.channels[j] + skip, k, k, 1, k / 2, cfg.rule));
  }
  layers.push_back(
      PConvLayer<T>::zeros(cfg.image_channels, cfg.channels[0], 1, 1, 1, 0, MaskRule::kNone));
  return layers;
}

template <typename T>
Tensor4<T> upsample2(const Tensor4<T>& t) {
  Tensor4<T> out(t.batch(), t.channels(), 2 * t.height(), 2 * t.width());
  for (int b = 0; b < t.batch(); ++b)
    for (int c = 0; c < t.channels(); ++c)
      for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out(b, c, y, x) = t(b, c, y / 2, x / 2);
  return out;
}

template <typename T>
Tensor4<T> upsample2_backward(const Tensor4<T>& d, int channels) {
  Tensor4<T> out(d.batch(), channels, d.height() / 2, d.width() / 2);
  for (int b = 0; b < d.batch(); ++b)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) out(b, c, y / 2, x / 2) += d(b, c, y, x);
  return out;
}

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  Tensor4<T> out(a.batch(), a.channels() + b.channels(), a.height(), a.width());
  for (int n = 0; n < a.batch(); ++n) {
    std::copy(a.item(n), a.item(n) + a.item_size(), out.item(n));
    std::copy(b.item(n), b.item(n) + b.item_size(), out.item(n) + a.item_size());
  }
  return out;
}

// Per-channel mask for a concatenation: each part keeps its own confidence.
template <typename T>
Tensor4<T> concat_masks(const Tensor4<T>& ma, int ca, const Tensor4<T>& mb, int cb) {
  Tensor4<T> out(ma.batch(), ca + cb, ma.height(), ma.width());
  const std::size_t plane = ma.plane();
  for (int n = 0; n < ma.batch(); ++n) {
    T* o = out.item(n);
    for (int c = 0; c < ca; ++c) std::copy(ma.item(n), ma.item(n) + plane, o + c * plane);
    for (int c = 0; c < cb; ++c)
      std::copy(mb.item(n), mb.item(n) + plane, o + (ca + c) * plane);
  }
  return out;
}

template <typename T>
void apply_activation(Tensor4<T>& t, double slope) {
  for (T& v : t.values())
    if (v < T(0)) v = static_cast<T>(slope) * v;
}

template <typename T>
void activation_backward(Tensor4<T>& d, const Tensor4<T>& out, double slope) {
  auto dv = d.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < dv.size(); ++i)
    if (!(ov[i] > T(0))) dv[i] *= static_cast<T>(slope);
}

struct L1Parts {
  double valid_sum = 0.0;
  double hole_sum = 0.0;
  std::size_t valid_n = 0;
  std::size_t hole_n = 0;
};

template <typename T>
void check_loss_shapes(const Tensor4<T>& pred, const Tensor4<T>& target,
                       const Tensor4<T>& mask) {
  if (!pred.same_shape(target))
    fail(ErrorCode::kDimensionMismatch,
         "loss: prediction " + pred.shape_string() + " vs target " + target.shape_string());
  require(mask.batch() == pred.batch() && mask.channels() == 1 &&
              mask.height() == pred.height() && mask.width() == pred.width(),
          ErrorCode::kDimensionMismatch, "loss: mask shape does not match prediction");
}

template <typename T>
L1Parts l1_parts(const Tensor4<T>& pred, const Tensor4<T>& target, const Tensor4<T>& mask) {
  L1Parts parts;
  const std::size_t plane = pred.plane();
  for (int b = 0; b < pred.batch(); ++b)
    for (int c = 0; c < pred.channels(); ++c) {
      const T* p = pred.item(b) + c * plane;
      const T* t = target.item(b) + c * plane;
      const T* m = mask.item(b);
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = std::abs(static_cast<double>(p[i]) - t[i]);
        if (m[i] == T(1)) {
          parts.valid_sum += d;
          ++parts.valid_n;
        } else {
          parts.hole_sum += d;
          ++parts.hole_n;
        }
      }
    }
  return parts;
}

double combine(const L1Parts& p, const LossWeights& w) {
  double loss = 0.0;
  if (p.valid_n > 0) loss += w.valid * p.valid_sum / static_cast<double>(p.valid_n);
  if (p.hole_n > 0) loss += w.hole * p.hole_sum / static_cast<double>(p.hole_n);
  return loss;
}

template <typename T>
Tensor4<T> l1_grad(const Tensor4<T>& pred, const Tensor4<T>& target, const Tensor4<T>& mask,
                   const LossWeights& w, std::size_t valid_n, std::size_t hole_n) {
  Tensor4<T> d(pred.batch(), pred.channels(), pred.height(), pred.width());
  const T gv = valid_n ? static_cast<T>(w.valid / static_cast<double>(valid_n)) : T(0);
  const T gh = hole_n ? static_cast<T>(w.hole / static_cast<double>(hole_n)) : T(0);
  const std::size_t plane = pred.plane();
  for (int b = 0; b < pred.batch(); ++b)
    for (int c = 0; c < pred.channels(); ++c) {
      const T* p = pred.item(b) + c * plane;
      const T* t = target.item(b) + c * plane;
      const T* m = mask.item(b);
      T* o = d.item(b) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T diff = p[i] - t[i];
        const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
        o[i] = sign * (m[i] == T(1) ? gv : gh);
      }
    }
  return d;
}

template <typename T>
Tensor4<T> slice_item(const Tensor4<T>& t, int b) {
  return Tensor4<T>(1, t.channels(), t.height(), t.width(),
                    std::vector<T>(t.item(b), t.item(b) + t.item_size()));
}

}  // namespace

void NetConfig::validate() const {
  require(levels() >= 2, ErrorCode::kInvalidArgument, "network needs at least 2 levels");
  require(static_cast<int>(encoder_kernels.size()) == levels(), ErrorCode::kInvalidArgument,
          "one encoder kernel size per level is required");
  for (int l = 0; l < levels(); ++l) {
    require(channels[l] >= 1, ErrorCode::kInvalidArgument, "channel counts must be >= 1");
    require(l == 0 || channels[l] > channels[l - 1], ErrorCode::kInvalidArgument,
            "encoder channel counts must be strictly increasing");
    require(encoder_kernels[l] >= 1 && encoder_kernels[l] % 2 == 1,
            ErrorCode::kInvalidArgument, "encoder kernel sizes must be odd");
  }
  require(decoder_kernel >= 1 && decoder_kernel % 2 == 1, ErrorCode::kInvalidArgument,
          "decoder kernel size must be odd");
  require(image_channels >= 1, ErrorCode::kInvalidArgument, "image_channels must be >= 1");
  require(leaky_slope >= 0.0 && leaky_slope < 1.0, ErrorCode::kInvalidArgument,
          "leaky slope must lie in [0,1)");
  require(rule != MaskRule::kNone, ErrorCode::kInvalidArgument,
          "network mask rule must be binary or soft");
}

template <typename T>
std::size_t NetworkParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename T>
NetConfig NetworkParams<T>::config() const {
  require(layers.size() >= 5 && layers.size() % 2 == 1, ErrorCode::kFormat,
          "network must have 2*levels+1 layers");
  NetConfig cfg;
  const int levels = this->levels();
  cfg.channels.clear();
  cfg.encoder_kernels.clear();
  for (int l = 0; l < levels; ++l) {
    cfg.channels.push_back(layers[l].out_channels);
    cfg.encoder_kernels.push_back(layers[l].kernel_h);
  }
  cfg.decoder_kernel = layers[levels].kernel_h;
  cfg.rule = layers[0].rule;
  cfg.image_channels = layers[0].in_channels;
  cfg.validate();
  const auto expected = layer_shapes<T>(cfg);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& e = expected[i];
    require(a.out_channels == e.out_channels && a.in_channels == e.in_channels &&
                a.kernel_h == e.kernel_h && a.kernel_w == e.kernel_w &&
                a.stride == e.stride && a.padding == e.padding && a.rule == e.rule,
            ErrorCode::kFormat,
            "layer " + layer_name(static_cast<int>(i), levels) +
                " does not fit the encoder-decoder layout");
    a.validate();
  }
  return cfg;
}

template <typename T>
NetworkParams<T> init_params(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkParams<T> p;
  p.layers = layer_shapes<T>(cfg);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel_h * l.kernel_w;
    const double limit = std::sqrt(6.0 / (static_cast<double>(l.fan_in()) + fan_out));
    CounterRng rng(derive_seed(seed, 0x1000 + i));
    for (T& w : l.weights) w = static_cast<T>(rng.uniform(-limit, limit));
  }
  return p;
}

template <typename T>
NetworkGrad<T> zero_grad(const NetworkParams<T>& p) {
  NetworkGrad<T> g;
  for (const auto& l : p.layers) g.push_back(LayerGrad<T>::zeros_like(l));
  return g;
}

template <typename T>
Tensor4<T> net_forward(const Tensor4<T>& image, const Tensor4<T>& mask,
                       const NetworkParams<T>& params, NetTrace<T>* trace) {
  const NetConfig cfg = params.config();
  const int levels = cfg.levels();
  require(image.channels() == cfg.image_channels, ErrorCode::kDimensionMismatch,
          "net_forward: image channel count does not match the network");
  require(mask.batch() == image.batch() && mask.channels() == 1 &&
              mask.height() == image.height() && mask.width() == image.width(),
          ErrorCode::kDimensionMismatch, "net_forward: mask shape does not match image");
  const int div = 1 << levels;
  if (image.height() % div != 0 || image.width() % div != 0)
    fail(ErrorCode::kInvalidArgument,
         "net_forward: spatial dims must be divisible by " + std::to_string(div));

  NetTrace<T> local;
  NetTrace<T>& tr = trace ? *trace : local;
  tr = NetTrace<T>{};
  auto record = [&](Tensor4<T> in, Tensor4<T> in_mask, PConvOutput<T> out) {
    tr.inputs.push_back(std::move(in));
    tr.input_masks.push_back(std::move(in_mask));
    tr.outputs.push_back(std::move(out.y));
    tr.output_masks.push_back(std::move(out.mask));
  };

  const std::size_t n_layers = params.layers.size();
  tr.inputs.reserve(n_layers);
  tr.input_masks.reserve(n_layers);
  tr.outputs.reserve(n_layers);
  tr.output_masks.reserve(n_layers);

  for (int l = 0; l < levels; ++l) {
    const Tensor4<T>& in = l == 0 ? image : tr.outputs[l - 1];
    const Tensor4<T>& in_mask = l == 0 ? mask : tr.output_masks[l - 1];
    auto out = pconv_forward(in, in_mask, params.encoder(l));
    apply_activation(out.y, 0.0);
    check_finite(out.y, l, levels, "activation");
    record(in, in_mask, std::move(out));
  }
  for (int i = 0; i < levels; ++i) {
    const int j = levels - 1 - i;
    const Tensor4<T>& deep = tr.outputs.back();
    const Tensor4<T>& deep_mask = tr.output_masks.back();
    const Tensor4<T>& skip = j == 0 ? image : tr.outputs[j - 1];
    const Tensor4<T>& skip_mask = j == 0 ? mask : tr.output_masks[j - 1];
    Tensor4<T> in = concat_channels(upsample2(deep), skip);
    Tensor4<T> in_mask =
        concat_masks(upsample2(deep_mask), deep.channels(), skip_mask, skip.channels());
    auto out = pconv_forward(in, in_mask, params.decoder(i));
    apply_activation(out.y, cfg.leaky_slope);
    check_finite(out.y, levels + i, levels, "activation");
    record(std::move(in), std::move(in_mask), std::move(out));
  }
  Tensor4<T> last = tr.outputs.back();
  auto out = pconv_forward(last, Tensor4<T>(), params.projection());
  check_finite(out.y, 2 * levels, levels, "activation");
  Tensor4<T> result = out.y;
  record(std::move(last), Tensor4<T>(), std::move(out));
  return result;
}

template <typename T>
void net_backward(const NetworkParams<T>& params, const NetTrace<T>& tr,
                  const Tensor4<T>& d_output, NetworkGrad<T>& grad) {
  const NetConfig cfg = params.config();
  const int levels = cfg.levels();
  require(tr.outputs.size() == params.layers.size() && grad.size() == params.layers.size(),
          ErrorCode::kInvalidArgument, "net_backward: trace does not match the network");

  const int proj = 2 * levels;
  Tensor4<T> d = pconv_backward(tr.inputs[proj], tr.input_masks[proj],
                                params.projection(), d_output, grad[proj]);
  check_finite(d, proj, levels, "gradient");

  // Gradients arriving at encoder outputs through skip connections.
  std::vector<Tensor4<T>> d_skip(levels);
  for (int i = levels - 1; i >= 0; --i) {
    const int idx = levels + i;
    const int j = levels - 1 - i;
    activation_backward(d, tr.outputs[idx], cfg.leaky_slope);
    Tensor4<T> d_in = pconv_backward(tr.inputs[idx], tr.input_masks[idx],
                                     params.decoder(i), d, grad[idx]);
    check_finite(d_in, idx, levels, "gradient");
    const int deep_channels = tr.outputs[j].channels();
    const int skip_channels = d_in.channels() - deep_channels;
    Tensor4<T> d_up(d_in.batch(), deep_channels, d_in.height(), d_in.width());
    Tensor4<T> d_sk(d_in.batch(), skip_channels, d_in.height(), d_in.width());
    for (int b = 0; b < d_in.batch(); ++b) {
      std::copy(d_in.item(b), d_in.item(b) + d_up.item_size(), d_up.item(b));
      std::copy(d_in.item(b) + d_up.item_size(), d_in.item(b) + d_in.item_size(),
                d_sk.item(b));
    }
    if (j >= 1) d_skip[j - 1] = std::move(d_sk);
    d = upsample2_backward(d_up, deep_channels);
  }
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) {
      auto dv = d.values();
      auto sv = d_skip[l].values();
      for (std::size_t k = 0; k < dv.size(); ++k) dv[k] += sv[k];
    }
    activation_backward(d, tr.outputs[l], 0.0);
    d = pconv_backward(tr.inputs[l], tr.input_masks[l], params.encoder(l), d, grad[l]);
    check_finite(d, l, levels, "gradient");
  }
}

template <typename T>
Tensor4<T> composite(const Tensor4<T>& input, const Tensor4<T>& pred, const Tensor4<T>& mask) {
  require(input.same_shape(pred), ErrorCode::kDimensionMismatch,
          "composite: input and prediction shapes differ");
  require(mask.batch() == input.batch() && mask.channels() == 1 &&
              mask.height() == input.height() && mask.width() == input.width(),
          ErrorCode::kDimensionMismatch, "composite: mask shape does not match input");
  Tensor4<T> out(input.batch(), input.channels(), input.height(), input.width());
  const std::size_t plane = input.plane();
  for (int b = 0; b < input.batch(); ++b)
    for (int c = 0; c < input.channels(); ++c) {
      const T* x = input.item(b) + c * plane;
      const T* p = pred.item(b) + c * plane;
      const T* m = mask.item(b);
      T* o = out.item(b) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) o[i] = m[i] * x[i] + (T(1) - m[i]) * p[i];
    }
  return out;
}

template <typename T>
double masked_l1_loss(const Tensor4<T>& pred, const Tensor4<T>& target,
                      const Tensor4<T>& mask, const LossWeights& w) {
  check_loss_shapes(pred, target, mask);
  return combine(l1_parts(pred, target, mask), w);
}

template <typename T>
Tensor4<T> masked_l1_loss_grad(const Tensor4<T>& pred, const Tensor4<T>& target,
                               const Tensor4<T>& mask, const LossWeights& w) {
  check_loss_shapes(pred, target, mask);
  const auto parts = l1_parts(pred, target, mask);
  return l1_grad(pred, target, mask, w, parts.valid_n, parts.hole_n);
}

template <typename T>
LossAndGrad<T> loss_and_grad(const NetworkParams<T>& params, const Batch<T>& batch,
                             const LossWeights& w) {
  check_loss_shapes(batch.input, batch.target, batch.mask);
  const int n = batch.input.batch();
  // Region sizes are pooled over the batch before any item is processed.
  std::size_t valid_n = 0, hole_n = 0;
  for (T m : batch.mask.values()) (m == T(1) ? valid_n : hole_n) += batch.input.channels();

  std::vector<NetworkGrad<T>> item_grads(n);
  std::vector<L1Parts> item_parts(n);
  parallel_for(n, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t bi = b0; bi < b1; ++bi) {
      const int b = static_cast<int>(bi);
      const Tensor4<T> x = slice_item(batch.input, b);
      const Tensor4<T> m = slice_item(batch.mask, b);
      const Tensor4<T> t = slice_item(batch.target, b);
      NetTrace<T> trace;
      const Tensor4<T> pred = net_forward(x, m, params, &trace);
      const Tensor4<T> out = w.composited ? composite(x, pred, m) : pred;
      item_parts[b] = l1_parts(out, t, m);
      Tensor4<T> d = l1_grad(out, t, m, w, valid_n, hole_n);
      if (w.composited) {
        // d(composite)/d(pred) = 1 - m
        const std::size_t plane = d.plane();
        for (int c = 0; c < d.channels(); ++c)
          for (std::size_t i = 0; i < plane; ++i)
            d.item(0)[c * plane + i] *= T(1) - m.item(0)[i];
      }
      item_grads[b] = zero_grad(params);
      net_backward(params, trace, d, item_grads[b]);
    }
  });

  LossAndGrad<T> result{0.0, zero_grad(params)};
  L1Parts total;
  for (int b = 0; b < n; ++b) {
    total.valid_sum += item_parts[b].valid_sum;
    total.hole_sum += item_parts[b].hole_sum;
    for (std::size_t l = 0; l < result.grad.size(); ++l) {
      auto& acc = result.grad[l];
      const auto& g = item_grads[b][l];
      for (std::size_t k = 0; k < acc.weights.size(); ++k) acc.weights[k] += g.weights[k];
      for (std::size_t k = 0; k < acc.bias.size(); ++k) acc.bias[k] += g.bias[k];
    }
  }
  total.valid_n = valid_n;
  total.hole_n = hole_n;
  result.loss = combine(total, w);
  return result;
}

template <typename T>
double batch_loss(const NetworkParams<T>& params, const Batch<T>& batch, const LossWeights& w) {
  const Tensor4<T> pred = net_forward(batch.input, batch.mask, params);
  if (!w.composited) return masked_l1_loss(pred, batch.target, batch.mask, w);
  return masked_l1_loss(composite(batch.input, pred, batch.mask), batch.target, batch.mask, w);
}

#define NOWFUSE_INSTANTIATE_NET(T)                                                        \
  template struct NetworkParams<T>;                                                       \
  template NetworkParams<T> init_params<T>(const NetConfig&, std::uint64_t);              \
  template NetworkGrad<T> zero_grad(const NetworkParams<T>&);                             \
  template Tensor4<T> net_forward(const Tensor4<T>&, const Tensor4<T>&,                   \
                                  const NetworkParams<T>&, NetTrace<T>*);                 \
  template void net_backward(const NetworkParams<T>&, const NetTrace<T>&,                 \
                             const Tensor4<T>&, NetworkGrad<T>&);                         \
  template Tensor4<T> composite(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&); \
  template double masked_l1_loss(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&, \
                                 const LossWeights&);                                     \
  template Tensor4<T> masked_l1_loss_grad(const Tensor4<T>&, const Tensor4<T>&,           \
                                          const Tensor4<T>&, const LossWeights&);         \
  template LossAndGrad<T> loss_and_grad(const NetworkParams<T>&, const Batch<T>&,         \
                                        const LossWeights&);                              \
  template double batch_loss(const NetworkParams<T>&, const Batch<T>&, const LossWeights&);

NOWFUSE_INSTANTIATE_NET(float)
NOWFUSE_INSTANTIATE_NET(double)

}  // namespace nowfuse
