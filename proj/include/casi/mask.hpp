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

#include "casi/tensor.hpp"

#include <cstddef>

namespace casi {

struct Region
{
  std::size_t top{0};
  std::size_t left{0};
  std::size_t height{0};
  std::size_t width{0};

  bool operator==(Region const &) const = default;
};

/// Missing-region mask plus the pixel-loss weight map.
///
/// `mask` is [H,W] with 1 for missing pixels and 0 for context. `weights` is
/// 0 outside the predicted region, 1 inside the missing region and the
/// overlap weight on the ring where the prediction extends into the context.
/// `predicted` is the bounding box of the predicted region; the discriminator
/// sees this crop.
struct MaskSpec
{
  Tensor mask;
  Tensor weights;
  Region missing;
  Region predicted;

  std::size_t height() const
  {
    return mask.dim(0);
  }
  std::size_t width() const
  {
    return mask.dim(1);
  }
  std::size_t missing_count() const;
  double      weight_sum() const;
};

inline constexpr double kOverlapWeight = 10.0;

/// Centered H/2 x W/2 hole; the predicted region grows it by `overlap`
/// pixels on every side. Throws ContractError if H or W is odd or the ring
/// does not fit.
MaskSpec make_center_mask(std::size_t height, std::size_t width, std::size_t overlap = 4);

/// Arbitrary binary mask (any shape of hole). Weights equal the mask, no
/// overlap ring; `predicted` and `missing` are the hole's bounding box.
/// Throws ContractError for non-binary values or an empty mask.
MaskSpec mask_from_tensor(Tensor const &mask);

/// z = (1 - M) * x + M * g for [C,H,W] or [N,C,H,W] images with an [H,W]
/// mask. Context pixels are copied from x bit-for-bit.
Tensor compose(Tensor const &x, Tensor const &generated, Tensor const &mask);

}  // namespace casi
