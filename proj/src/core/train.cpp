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

#include "nowfuse/train.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "nowfuse/io.hpp"
#include "nowfuse/random.hpp"

namespace nowfuse {

namespace {

constexpr char kWeightsMagic[4] = {'N', 'F', 'W', '1'};

class Adam {
 public:
  Adam(const NetworkParams<float>& p, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& l : p.layers) {
      m_.push_back(LayerGrad<double>{std::vector<double>(l.weights.size()),
                                     std::vector<double>(l.bias.size())});
      v_.push_back(m_.back());
    }
  }

  void step(NetworkParams<float>& p, const NetworkGrad<float>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      update(p.layers[l].weights, g[l].weights, m_[l].weights, v_[l].weights, c1, c2);
      update(p.layers[l].bias, g[l].bias, m_[l].bias, v_[l].bias, c1, c2);
    }
  }

 private:
  void update(std::vector<float>& w, const std::vector<float>& g, std::vector<double>& m,
              std::vector<double>& v, double c1, double c2) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double step =
          cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
      w[i] = static_cast<float>(w[i] - step);
    }
  }

  TrainConfig cfg_;
  std::vector<LayerGrad<double>> m_, v_;
  int t_ = 0;
};

// Draws batches from consecutive seeded permutations of [0, n).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

  std::vector<std::size_t> next(int batch) {
    std::vector<std::size_t> out;
    for (int i = 0; i < batch; ++i) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  CounterRng rng_;
  std::size_t pos_ = 0;
};

Batch<float> make_batch(const std::vector<TrainingItem>& data,
                        const std::vector<std::size_t>& idx) {
  const int h = data[idx[0]].target.height();
  const int w = data[idx[0]].target.width();
  const int n = static_cast<int>(idx.size());
  Batch<float> b{Tensor4<float>(n, 1, h, w), Tensor4<float>(n, 1, h, w),
                 Tensor4<float>(n, 1, h, w)};
  for (int k = 0; k < n; ++k) {
    const auto& item = data[idx[k]];
    std::copy(item.corrupted.values().begin(), item.corrupted.values().end(), b.input.item(k));
    std::copy(item.mask.values().begin(), item.mask.values().end(), b.mask.item(k));
    std::copy(item.target.values().begin(), item.target.values().end(), b.target.item(k));
  }
  return b;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  float f32() {
    const float v = std::bit_cast<float>(u32());
    require(std::isfinite(v), ErrorCode::kNonFinite, "non-finite value in weights file");
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    require(pos_ + n <= b_.size(), ErrorCode::kFormat, "truncated NFW1 weights file");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 4;
};

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
          "learning rate must be finite and >= 0");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  require(steps >= 1, ErrorCode::kInvalidArgument, "steps must be >= 1");
  require(loss.hole >= 0.0 && loss.valid >= 0.0, ErrorCode::kInvalidArgument,
          "loss weights must be >= 0");
}

NetworkParams<float> initial_params(const NetConfig& net_cfg, const TrainConfig& cfg) {
  return init_params<float>(net_cfg, derive_seed(cfg.seed, 1));
}

TrainResult train(const std::vector<TrainingItem>& dataset, const NetConfig& net_cfg,
                  const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  net_cfg.validate();
  require(!dataset.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  for (const auto& item : dataset) {
    require_same_shape(item.corrupted, item.target, "training item");
    require_same_shape(item.corrupted, item.mask.grid(), "training item mask");
    require_same_shape(item.corrupted, dataset[0].corrupted, "training set");
  }

  TrainResult result;
  result.params = initial_params(net_cfg, cfg);
  Adam adam(result.params, cfg);
  BatchSampler sampler(dataset.size(), derive_seed(cfg.seed, 2));
  NetworkParams<float> last_finite = result.params;
  for (int step = 0; step < cfg.steps; ++step) {
    const Batch<float> batch = make_batch(dataset, sampler.next(cfg.batch_size));
    LossAndGrad<float> lg;
    try {
      lg = loss_and_grad(result.params, batch, cfg.loss);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite) throw;
      result.diverged = true;
      result.message = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    if (!std::isfinite(lg.loss)) {
      result.diverged = true;
      result.message = "step " + std::to_string(step) + ": loss is not finite";
      break;
    }
    last_finite = result.params;
    result.losses.push_back(lg.loss);
    if (progress) progress(step, lg.loss);
    adam.step(result.params, lg.grad);
  }
  if (result.diverged) result.params = std::move(last_finite);
  return result;
}

Grid predict(const Grid& image, const MaskGrid& mask, const NetworkParams<float>& params) {
  require_same_shape(image, mask.grid(), "predict");
  const Tensor4<float> x(1, 1, image.height(), image.width(),
                         std::vector<float>(image.values().begin(), image.values().end()));
  const Tensor4<float> pred = net_forward(x, to_mask_tensor(mask), params);
  return clamp01(image.height(), image.width(), pred.values());
}

Grid inpaint(const Grid& image, const MaskGrid& mask, const NetworkParams<float>& params) {
  require_same_shape(image, mask.grid(), "inpaint");
  const int h = image.height();
  const int w = image.width();
  const Tensor4<float> x(1, 1, h, w, std::vector<float>(image.values().begin(),
                                                         image.values().end()));
  const Tensor4<float> m = to_mask_tensor(mask);
  const Tensor4<float> pred = net_forward(x, m, params);
  const Tensor4<float> out = composite(x, pred, m);
  return clamp01(h, w, out.values());
}

std::vector<std::uint8_t> encode_weights(const NetworkParams<float>& p) {
  std::vector<std::uint8_t> out(std::begin(kWeightsMagic), std::end(kWeightsMagic));
  put_u32(out, static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    l.validate();
    for (int v : {l.out_channels, l.in_channels, l.kernel_h, l.kernel_w, l.stride, l.padding})
      put_u32(out, static_cast<std::uint32_t>(v));
    out.push_back(static_cast<std::uint8_t>(l.rule));
    for (float v : l.weights) put_u32(out, std::bit_cast<std::uint32_t>(v));
    for (float v : l.bias) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

NetworkParams<float> decode_weights(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kWeightsMagic, 4) == 0,
          ErrorCode::kFormat, "bad magic: not an NFW1 weights file");
  Reader r(bytes);
  const std::uint32_t count = r.u32();
  require(count >= 1 && count < 4096, ErrorCode::kFormat, "implausible NFW1 layer count");
  NetworkParams<float> p;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t dims[6];
    for (auto& d : dims) {
      d = r.u32();
      require(d < (1u << 16), ErrorCode::kFormat, "implausible NFW1 layer dimension");
    }
    const std::uint8_t rule = r.u8();
    require(rule <= 2, ErrorCode::kFormat, "unknown mask rule byte in NFW1 file");
    auto l = PConvLayer<float>::zeros(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                                      static_cast<int>(dims[2]), static_cast<int>(dims[3]),
                                      static_cast<int>(dims[4]), static_cast<int>(dims[5]),
                                      static_cast<MaskRule>(rule));
    for (float& v : l.weights) v = r.f32();
    for (float& v : l.bias) v = r.f32();
    l.validate();
    p.layers.push_back(std::move(l));
  }
  require(r.done(), ErrorCode::kFormat, "trailing bytes after NFW1 payload");
  p.config();
  return p;
}

NetworkParams<float> read_weights(const std::filesystem::path& path) {
  try {
    return decode_weights(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_weights(const NetworkParams<float>& p, const std::filesystem::path& path) {
  write_file_atomic(path, encode_weights(p));
}

}  // namespace nowfuse
