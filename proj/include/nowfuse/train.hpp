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

#ifndef NOWFUSE_TRAIN_HPP_
#define NOWFUSE_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nowfuse/grid.hpp"
#include "nowfuse/network.hpp"

namespace nowfuse {

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 8;
  int steps = 1000;
  LossWeights loss{};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingItem {
  Grid corrupted;
  MaskGrid mask;
  Grid target;
};

struct TrainResult {
  NetworkParams<float> params;  // final, or last finite on divergence
  std::vector<double> losses;   // one entry per completed step
  bool diverged = false;
  std::string message;
};

// Called after every step with (step index, loss).
using TrainProgress = std::function<void(int, double)>;

// Parameters a training run with this configuration starts from.
NetworkParams<float> initial_params(const NetConfig& net_cfg, const TrainConfig& cfg);

// Adam on the masked-L1 loss. Batches are drawn from seeded
// epoch permutations of the dataset; fully deterministic per seed.
TrainResult train(const std::vector<TrainingItem>& dataset, const NetConfig& net_cfg,
                  const TrainConfig& cfg, const TrainProgress& progress = {});

// Raw network prediction for one image, clamped to [0,1].
Grid predict(const Grid& image, const MaskGrid& mask, const NetworkParams<float>& params);

// Composites the network prediction into the trusted pixels and clamps.
Grid inpaint(const Grid& image, const MaskGrid& mask, const NetworkParams<float>& params);

// NFW1: "NFW1", u32 layer count, then per layer u32 out_ch, in_ch, kh, kw,
// stride, padding, a mask-rule byte, weights and bias as LE float32.
std::vector<std::uint8_t> encode_weights(const NetworkParams<float>& p);
NetworkParams<float> decode_weights(const std::vector<std::uint8_t>& bytes);
NetworkParams<float> read_weights(const std::filesystem::path& path);
void write_weights(const NetworkParams<float>& p, const std::filesystem::path& path);

}  // namespace nowfuse

#endif  // NOWFUSE_TRAIN_HPP_
