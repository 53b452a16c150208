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

#include "casi/mask.hpp"

#include <algorithm>

namespace casi {

std::size_t MaskSpec::missing_count() const
{
  return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), 1.0));
}

double MaskSpec::weight_sum() const
{
  double s = 0.0;
  for (double w : weights.data())
  {
    s += w;
  }
  return s;
}

MaskSpec make_center_mask(std::size_t height, std::size_t width, std::size_t overlap)
{
  if (height == 0 || width == 0 || height % 2 != 0 || width % 2 != 0)
  {
    throw ContractError("center mask needs even, positive height and width");
  }
  std::size_t const hole_h = height / 2;
  std::size_t const hole_w = width / 2;
  if (hole_h + 2 * overlap > height || hole_w + 2 * overlap > width)
  {
    throw ContractError("overlap " + std::to_string(overlap) + " too large for a " +
                        std::to_string(height) + "x" + std::to_string(width) + " center mask");
  }

  MaskSpec spec;
  spec.missing   = Region{height / 4, width / 4, hole_h, hole_w};
  spec.predicted = Region{spec.missing.top - overlap, spec.missing.left - overlap,
                          hole_h + 2 * overlap, hole_w + 2 * overlap};
  spec.mask      = Tensor(Shape{height, width}, 0.0);
  spec.weights   = Tensor(Shape{height, width}, 0.0);

  auto inside = [](Region const &r, std::size_t y, std::size_t x) {
    return y >= r.top && y < r.top + r.height && x >= r.left && x < r.left + r.width;
  };
  for (std::size_t y = 0; y < height; ++y)
  {
    for (std::size_t x = 0; x < width; ++x)
    {
      std::size_t const i = y * width + x;
      if (inside(spec.missing, y, x))
      {
        spec.mask[i]    = 1.0;
        spec.weights[i] = 1.0;
      }
      else if (inside(spec.predicted, y, x))
      {
        spec.weights[i] = kOverlapWeight;
      }
    }
  }
  return spec;
}

MaskSpec mask_from_tensor(Tensor const &mask)
{
  if (mask.ndim() != 2)
  {
    throw DimensionError("mask must be [H,W]", "rank");
  }
  std::size_t const h = mask.dim(0);
  std::size_t const w = mask.dim(1);

  std::size_t top = h, left = w, bottom = 0, right = 0;
  bool        any = false;
  for (std::size_t y = 0; y < h; ++y)
  {
    for (std::size_t x = 0; x < w; ++x)
    {
      double const m = mask[y * w + x];
      if (m != 0.0 && m != 1.0)
      {
        throw ContractError("mask values must be exactly 0 or 1");
      }
      if (m == 1.0)
      {
        any    = true;
        top    = std::min(top, y);
        left   = std::min(left, x);
        bottom = std::max(bottom, y);
        right  = std::max(right, x);
      }
    }
  }
  if (!any)
  {
    throw ContractError("mask has no missing pixels");
  }
  MaskSpec spec;
  spec.mask      = mask;
  spec.weights   = mask;
  spec.missing   = Region{top, left, bottom - top + 1, right - left + 1};
  spec.predicted = spec.missing;
  return spec;
}

Tensor compose(Tensor const &x, Tensor const &generated, Tensor const &mask)
{
  require_same_shape(x.shape(), generated.shape(), "compose");
  if (x.ndim() < 2 || mask.ndim() != 2 || mask.dim(0) != x.dim(x.ndim() - 2) ||
      mask.dim(1) != x.dim(x.ndim() - 1))
  {
    throw DimensionError("compose: mask must be [H,W] matching the image", "H");
  }
  std::size_t const plane = mask.size();
  Tensor            z     = x;
  for (std::size_t j = 0; j < z.size(); ++j)
  {
    double const m = mask[j % plane];
    if (m == 1.0)
    {
      z[j] = generated[j];
    }
    else if (m != 0.0)
    {
      throw ContractError("compose: mask must be binary");
    }
  }
  return z;
}

}  // namespace casi
