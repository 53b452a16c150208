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

#include "casi/tensor.hpp"

#include "casi/rng.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace casi {

std::size_t shape_size(Shape const &shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(Shape const &shape)
{
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
  {
    os << (i ? "," : "") << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
  : shape_(std::move(shape))
  , data_(shape_size(shape_), fill)
{
  for (std::size_t i = 0; i < shape_.size(); ++i)
  {
    if (shape_[i] == 0)
    {
      throw DimensionError("tensor dimensions must be positive", std::to_string(i));
    }
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
  : shape_(std::move(shape))
  , data_(std::move(data))
{
  if (data_.size() != shape_size(shape_))
  {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_),
                         "all");
  }
}

Tensor Tensor::randn(Shape shape, SeededRng &rng, double mean, double stddev)
{
  Tensor t(std::move(shape));
  for (auto &v : t.data_)
  {
    v = rng.normal(mean, stddev);
  }
  return t;
}

Tensor Tensor::uniform(Shape shape, SeededRng &rng, double lo, double hi)
{
  Tensor t(std::move(shape));
  for (auto &v : t.data_)
  {
    v = rng.uniform(lo, hi);
  }
  return t;
}

Tensor Tensor::reshaped(Shape shape) const
{
  if (shape_size(shape) != data_.size())
  {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                             shape_to_string(shape),
                         "all");
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value)
{
  std::fill(data_.begin(), data_.end(), value);
}

void require_same_shape(Shape const &a, Shape const &b, std::string const &what)
{
  if (a.size() != b.size())
  {
    throw DimensionError(what + ": rank " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()),
                         "rank");
  }
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    if (a[i] != b[i])
    {
      throw DimensionError(what + ": shape " + shape_to_string(a) + " vs " + shape_to_string(b),
                           std::to_string(i));
    }
  }
}

}  // namespace casi
