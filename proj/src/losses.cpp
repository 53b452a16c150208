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

#include "casi/losses.hpp"

#include <algorithm>
#include <cmath>

namespace casi {

void LossWeights::validate() const
{
  if (pixel < 0.0 || adversarial < 0.0 || perceptual < 0.0)
  {
    throw ContractError("loss weights must be non-negative");
  }
  if (std::abs(pixel + adversarial + perceptual - 1.0) > 1e-12)
  {
    throw ContractError("loss weights must sum to 1");
  }
}

LossWeights LossWeights::with(double adversarial, double perceptual)
{
  LossWeights w;
  w.adversarial = adversarial;
  w.perceptual  = perceptual;
  w.pixel       = 1.0 - adversarial - perceptual;
  w.validate();
  return w;
}

namespace {

double clamp_prob(double p)
{
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

std::size_t images_and_channels(Tensor const &x, MaskSpec const &mask)
{
  auto const &s = x.shape();
  if (s.size() != 3 && s.size() != 4)
  {
    throw DimensionError("pixel loss expects [C,H,W] or [N,C,H,W]", "rank");
  }
  if (s[s.size() - 2] != mask.height() || s[s.size() - 1] != mask.width())
  {
    throw DimensionError("pixel loss: mask does not match image size", "H");
  }
  return x.size() / (mask.height() * mask.width());
}

}  // namespace

double pixel_l2_loss(Tensor const &x, Tensor const &z, MaskSpec const &mask)
{
  require_same_shape(x.shape(), z.shape(), "pixel_l2_loss");
  std::size_t const planes = images_and_channels(x, mask);
  std::size_t const plane  = mask.height() * mask.width();
  double            acc    = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
  {
    double const w = mask.weights[j % plane];
    double const d = x[j] - z[j];
    acc += w * d * d;
  }
  return acc / (static_cast<double>(planes) * mask.weight_sum());
}

double discriminator_loss(double d_real, double d_fake)
{
  return -(std::log(clamp_prob(d_real)) + std::log(1.0 - clamp_prob(d_fake)));
}

double generator_adv_loss(double d_fake)
{
  return -std::log(clamp_prob(d_fake));
}

double perceptual_loss(FeatureVector const &f_x, FeatureVector const &f_z)
{
  if (f_x.values.size() != f_z.values.size() || f_x.channels != f_z.channels ||
      f_x.height != f_z.height || f_x.width != f_z.width)
  {
    throw DimensionError("perceptual_loss: feature dimensions differ", "C");
  }
  if (f_x.values.size() != f_x.size())
  {
    throw DimensionError("perceptual_loss: feature length does not match C*H*W", "C");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f_x.values.size(); ++i)
  {
    double const d = f_x.values[i] - f_z.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(f_x.size());
}

double joint_loss(double pixel, double adversarial, double perceptual, LossWeights const &w)
{
  w.validate();
  return w.pixel * pixel + w.adversarial * adversarial + w.perceptual * perceptual;
}

namespace loss {

Var pixel_l2(Var prediction, Tensor const &target, MaskSpec const &mask)
{
  std::size_t const planes = images_and_channels(prediction.value(), mask);
  return ops::weighted_squared_error(prediction, target, mask.weights,
                                     static_cast<double>(planes) * mask.weight_sum());
}

Var discriminator(Var d_real, Var d_fake)
{
  require_same_shape(d_real.shape(), d_fake.shape(), "discriminator loss");
  double const lo        = kProbClamp;
  double const hi        = 1.0 - kProbClamp;
  Var const    log_real  = ops::log_clamped(d_real, lo, hi);
  Var const    one_minus = ops::add_scalar(ops::scale(d_fake, -1.0), 1.0);
  Var const    log_fake  = ops::log_clamped(one_minus, lo, hi);
  return ops::scale(ops::mean(ops::add(log_real, log_fake)), -1.0);
}

Var generator_adversarial(Var d_fake)
{
  return ops::scale(ops::mean(ops::log_clamped(d_fake, kProbClamp, 1.0 - kProbClamp)), -1.0);
}

Var perceptual(Var f_x, Var f_z)
{
  require_same_shape(f_x.shape(), f_z.shape(), "perceptual loss");
  Var const d = ops::sub(f_x, f_z);
  // mean over all N*D entries == batch mean of per-row ||.||^2 / D
  return ops::mean(ops::mul(d, d));
}

Var joint(Var pixel, Var adversarial, Var perceptual, LossWeights const &w)
{
  w.validate();
  return ops::add(ops::add(ops::scale(pixel, w.pixel), ops::scale(adversarial, w.adversarial)),
                  ops::scale(perceptual, w.perceptual));
}

}  // namespace loss
}  // namespace casi
