/*
 * Copyright 2026 The gaitphase Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gaitphase/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "gaitphase/error.hpp"

namespace gaitphase {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

NDArray::NDArray(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

NDArray::NDArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("NDArray: shape " + shape_str(shape_) + " does not hold " + std::to_string(data_.size()) +
                     " values");
  }
}

NDArray NDArray::scalar(double value) { return NDArray(Shape{}, std::vector<double>{value}); }

NDArray NDArray::from(std::initializer_list<double> values) {
  return NDArray(Shape{values.size()}, std::vector<double>(values));
}

std::size_t NDArray::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("NDArray::at: rank " + std::to_string(index.size()) + " index into shape " + shape_str(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) {
      throw ShapeError("NDArray::at: index " + std::to_string(i) + " out of range on axis " + std::to_string(axis) +
                       " of " + shape_str(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& NDArray::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double NDArray::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

double NDArray::item() const {
  if (data_.size() != 1) throw ShapeError("NDArray::item on shape " + shape_str(shape_));
  return data_[0];
}

NDArray NDArray::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("reshape: " + shape_str(shape_) + " -> " + shape_str(shape));
  }
  NDArray out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

void NDArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool NDArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace gaitphase
