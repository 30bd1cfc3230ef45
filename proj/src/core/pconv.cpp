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

#include "nowfuse/pconv.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>
#include <utility>

#include "nowfuse/parallel.hpp"

namespace nowfuse {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// Per-item window statistics of the channel-mean mask.
struct WindowStats {
  std::vector<double> sum;     // sum(M) per output position
  std::vector<double> max;     // max(M) per output position
  std::vector<double> center;  // M at the window anchor
};

template <typename T>
class ItemGeometry {
 public:
  ItemGeometry(const PConvLayer<T>& l, int height, int width)
      : layer(l), h(height), w(width), oh(l.out_height(height)), ow(l.out_width(width)),
        k(l.fan_in()), p(static_cast<std::size_t>(oh) * ow) {}

  const PConvLayer<T>& layer;
  int h, w, oh, ow;
  std::size_t k, p;
};

// Channel-mean mask of one item, in double.
template <typename T>
std::vector<double> mean_mask(const Tensor4<T>& mask, int b, const PConvLayer<T>& layer,
                              std::size_t plane) {
  if (layer.rule == MaskRule::kNone) return std::vector<double>(plane, 1.0);
  std::vector<double> mbar(plane, 0.0);
  const T* m = mask.item(b);
  for (int c = 0; c < mask.channels(); ++c)
    for (std::size_t i = 0; i < plane; ++i) mbar[i] += m[c * plane + i];
  if (mask.channels() > 1)
    for (double& v : mbar) v /= mask.channels();
  return mbar;
}

template <typename T>
WindowStats window_stats(const ItemGeometry<T>& g, const std::vector<double>& mbar) {
  const auto& l = g.layer;
  WindowStats s{std::vector<double>(g.p), std::vector<double>(g.p),
                std::vector<double>(g.p)};
  for (int oy = 0; oy < g.oh; ++oy)
    for (int ox = 0; ox < g.ow; ++ox) {
      double sum = 0.0, mx = 0.0;
      const int y0 = oy * l.stride - l.padding;
      const int x0 = ox * l.stride - l.padding;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int y = y0 + ky;
        if (y < 0 || y >= g.h) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int x = x0 + kx;
          if (x < 0 || x >= g.w) continue;
          const double v = mbar[static_cast<std::size_t>(y) * g.w + x];
          sum += v;
          mx = std::max(mx, v);
        }
      }
      const int cy = y0 + l.kernel_h / 2;
      const int cx = x0 + l.kernel_w / 2;
      const std::size_t o = static_cast<std::size_t>(oy) * g.ow + ox;
      s.sum[o] = sum;
      s.max[o] = mx;
      s.center[o] = (cy >= 0 && cy < g.h && cx >= 0 && cx < g.w)
                        ? mbar[static_cast<std::size_t>(cy) * g.w + cx]
                        : 0.0;
    }
  return s;
}

// cols(k, p) = (x * m)(channel, y, x) for every window tap k and position p.
// Output indices o in [lo, hi) whose tap o*stride - pad + k lands inside [0, n).
std::pair<int, int> tap_range(int k, int stride, int pad, int n, int n_out) {
  const int first = pad - k;  // o*stride >= first
  int lo = first <= 0 ? 0 : (first + stride - 1) / stride;
  int hi = (n - 1 + pad - k) < 0 ? 0 : (n - 1 + pad - k) / stride + 1;
  lo = std::min(lo, n_out);
  hi = std::clamp(hi, lo, n_out);
  return {lo, hi};
}

template <typename T>
RowMat<T> im2col(const ItemGeometry<T>& g, const Tensor4<T>& x, const Tensor4<T>& mask,
                 int b) {
  const auto& l = g.layer;
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  const T* xi = x.item(b);
  const bool masked = l.rule != MaskRule::kNone;
  const bool per_channel = masked && mask.channels() > 1;
  const T* mi = masked ? mask.item(b) : nullptr;
  std::vector<T> xm(plane);
  RowMat<T> cols(g.k, g.p);
  std::size_t row = 0;
  for (int c = 0; c < l.in_channels; ++c) {
    const T* xc = xi + c * plane;
    if (masked) {
      const T* mc = mi + (per_channel ? c * plane : 0);
      for (std::size_t i = 0; i < plane; ++i) xm[i] = xc[i] * mc[i];
      xc = xm.data();
    }
    for (int ky = 0; ky < l.kernel_h; ++ky) {
      const auto [oy_lo, oy_hi] = tap_range(ky, l.stride, l.padding, g.h, g.oh);
      for (int kx = 0; kx < l.kernel_w; ++kx, ++row) {
        const auto [ox_lo, ox_hi] = tap_range(kx, l.stride, l.padding, g.w, g.ow);
        T* out = cols.row(row).data();
        std::fill(out, out + g.p, T(0));
        for (int oy = oy_lo; oy < oy_hi; ++oy) {
          const T* src = xc + static_cast<std::size_t>(oy * l.stride - l.padding + ky) * g.w +
                         (kx - l.padding);
          T* dst = out + static_cast<std::size_t>(oy) * g.ow;
          if (l.stride == 1) {
            std::copy(src + ox_lo, src + ox_hi, dst + ox_lo);
          } else {
            for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = src[ox * l.stride];
          }
        }
      }
    }
  }
  return cols;
}

template <typename T>
void check_inputs(const Tensor4<T>& x, const Tensor4<T>& mask, const PConvLayer<T>& l) {
  l.validate();
  if (x.channels() != l.in_channels)
    fail(ErrorCode::kDimensionMismatch, "pconv: input has " + std::to_string(x.channels()) + " channels, layer expects " +
              std::to_string(l.in_channels));
  require(l.out_height(x.height()) >= 1 && l.out_width(x.width()) >= 1,
          ErrorCode::kInvalidArgument, "pconv: input smaller than kernel");
  if (l.rule == MaskRule::kNone) return;
  if (!(mask.batch() == x.batch() && mask.height() == x.height() &&
        mask.width() == x.width() &&
        (mask.channels() == 1 || mask.channels() == x.channels())))
    fail(ErrorCode::kDimensionMismatch,
         "pconv: mask " + mask.shape_string() + " does not match input " + x.shape_string());
  for (const T v : mask.values()) {
    if (!(v >= T(0) && v <= T(1)))
      fail(ErrorCode::kInvalidArgument, "pconv: mask value outside [0,1]");
    if (l.rule == MaskRule::kBinary && v != T(0) && v != T(1))
      fail(ErrorCode::kInvalidArgument, "pconv: binary layer given a fractional mask");
  }
}

}  // namespace

template <typename T>
PConvLayer<T> PConvLayer<T>::zeros(int out_ch, int in_ch, int kh, int kw, int stride,
                                   int padding, MaskRule rule) {
  PConvLayer l;
  l.out_channels = out_ch;
  l.in_channels = in_ch;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.stride = stride;
  l.padding = padding;
  l.rule = rule;
  l.weights.assign(static_cast<std::size_t>(out_ch) * in_ch * kh * kw, T(0));
  l.bias.assign(out_ch, T(0));
  return l;
}

template <typename T>
void PConvLayer<T>::validate() const {
  require(out_channels >= 1 && in_channels >= 1, ErrorCode::kInvalidArgument,
          "pconv layer needs at least one input and output channel");
  require(kernel_h >= 1 && kernel_w >= 1 && kernel_h % 2 == 1 && kernel_w % 2 == 1,
          ErrorCode::kInvalidArgument, "pconv kernel sizes must be odd");
  require(stride >= 1 && padding >= 0, ErrorCode::kInvalidArgument,
          "pconv stride must be >= 1 and padding >= 0");
  require(weights.size() == static_cast<std::size_t>(out_channels) * fan_in() &&
              bias.size() == static_cast<std::size_t>(out_channels),
          ErrorCode::kDimensionMismatch, "pconv parameter block has the wrong size");
}

template <typename T>
PConvOutput<T> pconv_forward(const Tensor4<T>& x, const Tensor4<T>& mask,
                             const PConvLayer<T>& layer) {
  check_inputs(x, mask, layer);
  const ItemGeometry<T> g(layer, x.height(), x.width());
  PConvOutput<T> out{Tensor4<T>(x.batch(), layer.out_channels, g.oh, g.ow),
                     Tensor4<T>(x.batch(), 1, g.oh, g.ow)};
  const ConstMapMat<T> w(layer.weights.data(), layer.out_channels, g.k);
  parallel_for(x.batch(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t bi = b0; bi < b1; ++bi) {
      const int b = static_cast<int>(bi);
      const auto mbar = mean_mask(mask, b, layer, x.plane());
      const auto stats = window_stats(g, mbar);
      const RowMat<T> cols = im2col(g, x, mask, b);
      const RowMat<T> conv = w * cols;
      T* y = out.y.item(b);
      for (int o = 0; o < layer.out_channels; ++o)
        for (std::size_t p = 0; p < g.p; ++p)
          y[o * g.p + p] = stats.sum[p] > 0.0
                               ? conv(o, p) / static_cast<T>(stats.sum[p]) + layer.bias[o]
                               : T(0);
      T* m = out.mask.item(b);
      for (std::size_t p = 0; p < g.p; ++p) {
        switch (layer.rule) {
          case MaskRule::kBinary: m[p] = stats.sum[p] > 0.0 ? T(1) : T(0); break;
          case MaskRule::kSoft:
            m[p] = stats.max[p] == 1.0 ? T(1) : static_cast<T>(stats.center[p]);
            break;
          case MaskRule::kNone: m[p] = T(1); break;
        }
      }
    }
  });
  return out;
}

template <typename T>
PConvOutput<T> pconv_forward(const Tensor4<T>& x, const MaskGrid& mask,
                             const PConvLayer<T>& layer) {
  require(mask.height() == x.height() && mask.width() == x.width(),
          ErrorCode::kDimensionMismatch, "pconv: mask grid does not match input");
  std::vector<T> m;
  m.reserve(x.plane() * x.batch());
  for (int b = 0; b < x.batch(); ++b)
    for (float v : mask.values()) m.push_back(static_cast<T>(v));
  return pconv_forward(x, Tensor4<T>(x.batch(), 1, x.height(), x.width(), std::move(m)),
                       layer);
}

template <typename T>
Tensor4<T> pconv_backward(const Tensor4<T>& x, const Tensor4<T>& mask,
                          const PConvLayer<T>& layer, const Tensor4<T>& dy,
                          LayerGrad<T>& grad) {
  check_inputs(x, mask, layer);
  const ItemGeometry<T> g(layer, x.height(), x.width());
  require(dy.batch() == x.batch() && dy.channels() == layer.out_channels &&
              dy.height() == g.oh && dy.width() == g.ow,
          ErrorCode::kDimensionMismatch, "pconv_backward: output gradient has wrong shape");
  require(grad.weights.size() == layer.weights.size() &&
              grad.bias.size() == layer.bias.size(),
          ErrorCode::kDimensionMismatch, "pconv_backward: gradient block has wrong size");

  Tensor4<T> dx(x.batch(), x.channels(), x.height(), x.width());
  const ConstMapMat<T> w(layer.weights.data(), layer.out_channels, g.k);
  MapMat<T> dw(grad.weights.data(), layer.out_channels, g.k);
  const std::size_t plane = x.plane();
  for (int b = 0; b < x.batch(); ++b) {
    const auto mbar = mean_mask(mask, b, layer, plane);
    const auto stats = window_stats(g, mbar);
    const RowMat<T> cols = im2col(g, x, mask, b);
    RowMat<T> dconv(layer.out_channels, g.p);
    const T* dyb = dy.item(b);
    for (int o = 0; o < layer.out_channels; ++o) {
      T db = T(0);
      for (std::size_t p = 0; p < g.p; ++p) {
        if (stats.sum[p] > 0.0) {
          const T d = dyb[o * g.p + p];
          dconv(o, p) = d / static_cast<T>(stats.sum[p]);
          db += d;
        } else {
          dconv(o, p) = T(0);
        }
      }
      grad.bias[o] += db;
    }
    dw.noalias() += dconv * cols.transpose();
    const RowMat<T> dcols = w.transpose() * dconv;

    // col2im, then the chain rule through x * m.
    T* dxb = dx.item(b);
    std::size_t row = 0;
    for (int c = 0; c < layer.in_channels; ++c) {
      T* dxc = dxb + c * plane;
      for (int ky = 0; ky < layer.kernel_h; ++ky) {
        const auto [oy_lo, oy_hi] = tap_range(ky, layer.stride, layer.padding, g.h, g.oh);
        for (int kx = 0; kx < layer.kernel_w; ++kx, ++row) {
          const auto [ox_lo, ox_hi] = tap_range(kx, layer.stride, layer.padding, g.w, g.ow);
          const T* src = dcols.row(row).data();
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            T* dst = dxc +
                     static_cast<std::size_t>(oy * layer.stride - layer.padding + ky) * g.w +
                     (kx - layer.padding);
            const T* s = src + static_cast<std::size_t>(oy) * g.ow;
            for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox * layer.stride] += s[ox];
          }
        }
      }
      if (layer.rule != MaskRule::kNone) {
        const T* mc = mask.item(b) + (mask.channels() > 1 ? c * plane : 0);
        for (std::size_t i = 0; i < plane; ++i) dxc[i] *= mc[i];
      }
    }
  }
  return dx;
}

double mask_update_binary(std::span<const double> window) {
  double sum = 0.0;
  for (double v : window) sum += v;
  return sum > 0.0 ? 1.0 : 0.0;
}

double mask_update_soft(std::span<const double> window, double center) {
  const double mx = window.empty() ? 0.0 : *std::max_element(window.begin(), window.end());
  return mx == 1.0 ? 1.0 : center;
}

Tensor4<float> to_mask_tensor(const MaskGrid& m, int batch) {
  std::vector<float> v;
  v.reserve(m.size() * batch);
  for (int b = 0; b < batch; ++b) v.insert(v.end(), m.values().begin(), m.values().end());
  return Tensor4<float>(batch, 1, m.height(), m.width(), std::move(v));
}

#define NOWFUSE_INSTANTIATE_PCONV(T)                                                   \
  template struct PConvLayer<T>;                                                       \
  template PConvOutput<T> pconv_forward(const Tensor4<T>&, const Tensor4<T>&,          \
                                        const PConvLayer<T>&);                         \
  template PConvOutput<T> pconv_forward(const Tensor4<T>&, const MaskGrid&,            \
                                        const PConvLayer<T>&);                         \
  template Tensor4<T> pconv_backward(const Tensor4<T>&, const Tensor4<T>&,             \
                                     const PConvLayer<T>&, const Tensor4<T>&,          \
                                     LayerGrad<T>&);

NOWFUSE_INSTANTIATE_PCONV(float)
NOWFUSE_INSTANTIATE_PCONV(double)

}  // namespace nowfuse
