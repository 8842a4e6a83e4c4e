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

#include "sagrnn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace sagrnn {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {
void check_extents(const Shape& shape) {
  for (int64_t e : shape) {
    if (e <= 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_str(shape));
    }
  }
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(static_cast<size_t>(shape_numel(shape_)), fill);
}

Tensor Tensor::from_vector(std::vector<double> v) {
  Shape s{static_cast<int64_t>(v.size())};
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : t.data_) x = dist(rng);
  return t;
}

int64_t Tensor::flat_index(std::initializer_list<int64_t> idx) const {
  if (static_cast<int64_t>(idx.size()) != rank()) {
    throw DimensionError("index rank mismatch for shape " + shape_str(shape_));
  }
  int64_t flat = 0;
  int64_t axis = 0;
  for (int64_t i : idx) {
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

double& Tensor::at(std::initializer_list<int64_t> idx) {
  return data_[flat_index(idx)];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return data_[flat_index(idx)];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() requires a scalar, got shape " +
                     shape_str(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw DimensionError("reshape " + shape_str(shape_) + " -> " +
                         shape_str(shape) + " changes element count");
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace sagrnn
