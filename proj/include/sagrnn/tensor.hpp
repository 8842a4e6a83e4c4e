// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
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

#ifndef SAGRNN_TENSOR_HPP_
#define SAGRNN_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "sagrnn/errors.hpp"
#include "sagrnn/rng.hpp"

namespace sagrnn {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array of 64-bit reals. This is the value type of every
// numeric quantity in the project; autodiff bookkeeping lives in Node
// (autodiff.hpp), not here.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, double fill);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor full(Shape shape, double v) {
    return Tensor(std::move(shape), v);
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor from_vector(std::vector<double> v);
  // Uniform on [lo, hi), one draw per element in row-major order.
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng);

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t extent(int64_t axis) const { return shape_[axis]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  double& at(std::initializer_list<int64_t> idx);
  double at(std::initializer_list<int64_t> idx) const;

  // Scalar access; requires numel() == 1.
  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor reshaped(Shape shape) const;

 private:
  int64_t flat_index(std::initializer_list<int64_t> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace sagrnn

#endif  // SAGRNN_TENSOR_HPP_
