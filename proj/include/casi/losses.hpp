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

#include "casi/autodiff.hpp"
#include "casi/mask.hpp"
#include "casi/model.hpp"

namespace casi {

/// Coefficients of the joint inpainting loss. They must be non-negative and
/// sum to one.
struct LossWeights
{
  double pixel{0.799};
  double adversarial{0.001};
  double perceptual{0.2};

  /// Throws ContractError for negative weights or a sum off by more than 1e-12.
  void validate() const;

  /// Pixel weight set to 1 - adversarial - perceptual.
  static LossWeights with(double adversarial, double perceptual);

  bool operator==(LossWeights const &) const = default;
};

struct LossReport
{
  double pixel{0.0};
  double adversarial{0.0};
  double perceptual{0.0};
  double joint{0.0};
};

/// Discriminator outputs are clamped into [kProbClamp, 1 - kProbClamp] before
/// any logarithm.
inline constexpr double kProbClamp = 1e-7;

// Scalar forms, used for reporting and as test oracles.

/// Weighted mean squared error over the predicted region:
/// sum(w * (x - z)^2) / (N * C * sum(w)). `x`, `z` are [N,C,H,W] or [C,H,W].
double pixel_l2_loss(Tensor const &x, Tensor const &z, MaskSpec const &mask);

/// -[ln d_real + ln(1 - d_fake)]
double discriminator_loss(double d_real, double d_fake);

/// -ln d_fake (non-saturating generator objective)
double generator_adv_loss(double d_fake);

/// ||f_x - f_z||^2 / (C * H * W)
double perceptual_loss(FeatureVector const &f_x, FeatureVector const &f_z);

double joint_loss(double pixel, double adversarial, double perceptual, LossWeights const &w);

// Differentiable forms on a tape.
namespace loss {

/// `prediction` is the raw generator output [N,C,H,W]; `target` the ground
/// truth. Normalised per the scalar form above.
Var pixel_l2(Var prediction, Tensor const &target, MaskSpec const &mask);

/// Batch mean of -[ln D(real) + ln(1 - D(fake))]; inputs are [N,1].
Var discriminator(Var d_real, Var d_fake);

/// Batch mean of -ln D(fake).
Var generator_adversarial(Var d_fake);

/// Batch mean of ||f_x - f_z||^2 / D for feature rows [N,D].
Var perceptual(Var f_x, Var f_z);

Var joint(Var pixel, Var adversarial, Var perceptual, LossWeights const &w);

}  // namespace loss
}  // namespace casi
