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

#include <cstdint>
#include <vector>

namespace casi {

struct AdamHyper
{
  double learning_rate{2e-4};
  double beta1{0.5};
  double beta2{0.999};
  double epsilon{1e-8};

  bool operator==(AdamHyper const &) const = default;
};

/// First/second moment buffers for a list of parameters, plus the shared
/// step counter.
struct AdamState
{
  AdamHyper           hyper;
  std::uint64_t       step{0};
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  AdamState(AdamHyper hyper, std::vector<Tensor> const &params);

  bool operator==(AdamState const &) const = default;
};

/// One bias-corrected Adam update in place. Increments `state.step` by one.
/// Throws DimensionError when the parameter, gradient and moment shapes
/// disagree.
void adam_step(std::vector<Tensor *> const &params, std::vector<Tensor const *> const &grads,
               AdamState &state);

}  // namespace casi
