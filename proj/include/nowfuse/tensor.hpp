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

#ifndef NOWFUSE_TENSOR_HPP_
#define NOWFUSE_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nowfuse/error.hpp"

namespace nowfuse {

// Dense (batch, channels, height, width) array, row-major.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int batch, int channels, int height, int width, T fill = T(0))
      : b_(batch), c_(channels), h_(height), w_(width) {
    require(batch >= 1 && channels >= 1 && height >= 1 && width >= 1,
            ErrorCode::kInvalidArgument, "tensor dimensions must be >= 1");
    v_.assign(static_cast<std::size_t>(batch) * channels * height * width, fill);
  }
  Tensor4(int batch, int channels, int height, int width, std::vector<T> values)
      : b_(batch), c_(channels), h_(height), w_(width), v_(std::move(values)) {
    require(batch >= 1 && channels >= 1 && height >= 1 && width >= 1,
            ErrorCode::kInvalidArgument, "tensor dimensions must be >= 1");
    require(v_.size() == static_cast<std::size_t>(batch) * channels * height * width,
            ErrorCode::kDimensionMismatch, "tensor payload does not match dimensions");
  }

  int batch() const { return b_; }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return v_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t item_size() const { return plane() * c_; }

  T& operator()(int b, int c, int y, int x) { return v_[index(b, c, y, x)]; }
  T operator()(int b, int c, int y, int x) const { return v_[index(b, c, y, x)]; }
  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  T* item(int b) { return v_.data() + b * item_size(); }
  const T* item(int b) const { return v_.data() + b * item_size(); }
  std::span<T> values() { return v_; }
  std::span<const T> values() const { return v_; }

  bool same_shape(const Tensor4& o) const {
    return b_ == o.b_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }
  std::string shape_string() const {
    return std::to_string(b_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) +
           "x" + std::to_string(w_);
  }
  bool all_finite() const {
    for (const T& v : v_)
      if (!std::isfinite(v)) return false;
    return true;
  }
  friend bool operator==(const Tensor4& a, const Tensor4& b) = default;

 private:
  std::size_t index(int b, int c, int y, int x) const {
    return ((static_cast<std::size_t>(b) * c_ + c) * h_ + y) * w_ + x;
  }

  int b_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> v_;
};

template <typename To, typename From>
Tensor4<To> tensor_cast(const Tensor4<From>& t) {
  std::vector<To> v(t.values().begin(), t.values().end());
  return Tensor4<To>(t.batch(), t.channels(), t.height(), t.width(), std::move(v));
}

}  // namespace nowfuse

#endif  // NOWFUSE_TENSOR_HPP_
