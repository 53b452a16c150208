//------------------------------------------------------------------------------
//
//   Copyright 2026 The CASI Inpainting Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "casi/error.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace casi {

class SeededRng;

using Shape = std::vector<std::size_t>;

std::size_t shape_size(Shape const &shape);
std::string shape_to_string(Shape const &shape);

/// Dense row-major array of 64-bit floats. Gradients live on the Tape, not
/// here, so a Tensor is a plain value.
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape)
  {
    return Tensor(std::move(shape), 0.0);
  }
  static Tensor ones(Shape shape)
  {
    return Tensor(std::move(shape), 1.0);
  }
  static Tensor randn(Shape shape, SeededRng &rng, double mean = 0.0, double stddev = 1.0);
  static Tensor uniform(Shape shape, SeededRng &rng, double lo, double hi);

  Shape const &shape() const noexcept
  {
    return shape_;
  }
  std::size_t ndim() const noexcept
  {
    return shape_.size();
  }
  std::size_t dim(std::size_t axis) const
  {
    return shape_.at(axis);
  }
  std::size_t size() const noexcept
  {
    return data_.size();
  }

  std::span<double> data() & noexcept
  {
    return data_;
  }
  std::span<double const> data() const & noexcept
  {
    return data_;
  }
  /// A span into a temporary would dangle.
  std::span<double const> data() const && = delete;
  std::vector<double> const &values() const noexcept
  {
    return data_;
  }

  double &operator[](std::size_t i)
  {
    return data_[i];
  }
  double operator[](std::size_t i) const
  {
    return data_[i];
  }

  /// NCHW accessor.
  double &at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
  {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
  {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Same data, new shape; element counts must agree.
  Tensor reshaped(Shape shape) const;

  void fill(double value);

  bool operator==(Tensor const &other) const = default;

private:
  Shape               shape_;
  std::vector<double> data_;
};

/// Throws DimensionError naming `what` when the two shapes differ.
void require_same_shape(Shape const &a, Shape const &b, std::string const &what);

}  // namespace casi
