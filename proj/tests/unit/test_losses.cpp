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

#include "casi/gradcheck.hpp"
#include "casi/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace casi;

namespace {

FeatureVector feature(std::vector<double> v)
{
  FeatureVector f;
  f.channels = v.size();
  f.values   = std::move(v);
  return f;
}

}  // namespace

TEST(LossWeights, DefaultsSumToOne)
{
  LossWeights const w;
  EXPECT_DOUBLE_EQ(w.adversarial, 0.001);
  EXPECT_DOUBLE_EQ(w.perceptual, 0.2);
  EXPECT_NEAR(w.pixel + w.adversarial + w.perceptual, 1.0, 1e-12);
  EXPECT_NO_THROW(w.validate());
}

TEST(LossWeights, ValidateRejectsBadWeights)
{
  EXPECT_THROW((LossWeights{0.5, 0.5, 0.5}).validate(), ContractError);
  EXPECT_THROW((LossWeights{1.1, -0.1, 0.0}).validate(), ContractError);
  LossWeights const l2 = LossWeights::with(0.0, 0.0);
  EXPECT_EQ(l2.pixel, 1.0);
}

TEST(PixelLoss, IdenticalImagesGiveZero)
{
  SeededRng      rng(1);
  Tensor const   x = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
  MaskSpec const m = make_center_mask(8, 8, 1);
  EXPECT_EQ(pixel_l2_loss(x, x, m), 0.0);
}

TEST(PixelLoss, ConstantDifferenceInInterior)
{
  MaskSpec const m = make_center_mask(8, 8, 0);
  Tensor const   x(Shape{3, 8, 8}, 0.2);
  Tensor const   z(Shape{3, 8, 8}, 0.7);
  EXPECT_NEAR(pixel_l2_loss(x, z, m), 0.25, 1e-15);
}

TEST(PixelLoss, HalfInteriorDiffersByOne)
{
  MaskSpec const m = make_center_mask(8, 8, 0);
  Tensor const   x(Shape{1, 3, 8, 8}, 0.0);
  Tensor         z = x;
  // rows 2..3 of the 4x4 hole (rows 2..5) differ by 1 in every channel
  for (std::size_t c = 0; c < 3; ++c)
  {
    for (std::size_t y = 2; y < 4; ++y)
    {
      for (std::size_t xx = 2; xx < 6; ++xx)
      {
        z.at(0, c, y, xx) = 1.0;
      }
    }
  }
  EXPECT_NEAR(pixel_l2_loss(x, z, m), 0.5, 1e-15);
}

TEST(PixelLoss, IgnoresPixelsOutsidePredictedRegion)
{
  SeededRng      rng(2);
  MaskSpec const m = make_center_mask(16, 16, 2);
  Tensor const   x = Tensor::uniform(Shape{3, 16, 16}, rng, 0.0, 1.0);
  Tensor const   z = Tensor::uniform(Shape{3, 16, 16}, rng, 0.0, 1.0);
  Tensor         perturbed = z;
  for (std::size_t c = 0; c < 3; ++c)
  {
    for (std::size_t i = 0; i < 256; ++i)
    {
      if (m.weights[i] == 0.0)
      {
        perturbed[c * 256 + i] += 5.0;
      }
    }
  }
  EXPECT_EQ(pixel_l2_loss(x, z, m), pixel_l2_loss(x, perturbed, m));
}

TEST(PixelLoss, RingCountsTenfold)
{
  // one ring pixel differing by 1 in each channel against the normaliser
  MaskSpec const m = make_center_mask(8, 8, 1);
  Tensor const   x(Shape{3, 8, 8}, 0.0);
  Tensor         z = x;
  for (std::size_t c = 0; c < 3; ++c)
  {
    z[c * 64 + 1 * 8 + 1] = 1.0;
  }
  ASSERT_EQ(m.weights[1 * 8 + 1], kOverlapWeight);
  EXPECT_NEAR(pixel_l2_loss(x, z, m), 3.0 * 10.0 / (3.0 * m.weight_sum()), 1e-15);
}

TEST(PixelLoss, ShapeMismatchThrows)
{
  MaskSpec const m = make_center_mask(8, 8, 0);
  EXPECT_THROW(pixel_l2_loss(Tensor(Shape{3, 8, 8}), Tensor(Shape{3, 8, 6}), m), DimensionError);
  EXPECT_THROW(pixel_l2_loss(Tensor(Shape{3, 6, 6}), Tensor(Shape{3, 6, 6}), m), DimensionError);
}

TEST(DiscriminatorLoss, ClosedFormValues)
{
  EXPECT_NEAR(discriminator_loss(0.5, 0.5), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(discriminator_loss(1.0 - 1e-7, 1e-7), 2e-7, 1e-12);
  EXPECT_LT(discriminator_loss(0.8, 0.3), discriminator_loss(0.6, 0.3));
}

TEST(DiscriminatorLoss, FiniteAtTheBoundaries)
{
  for (double r : {0.0, 1.0})
  {
    for (double f : {0.0, 1.0})
    {
      EXPECT_TRUE(std::isfinite(discriminator_loss(r, f)));
    }
    EXPECT_TRUE(std::isfinite(generator_adv_loss(r)));
  }
  EXPECT_NEAR(discriminator_loss(0.0, 1.0), -2.0 * std::log(kProbClamp), 1e-9);
}

TEST(GeneratorAdversarialLoss, ClosedFormAndMonotone)
{
  EXPECT_NEAR(generator_adv_loss(0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(generator_adv_loss(1.0 - 1e-7), 1e-7, 1e-12);
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.05; d < 1.0; d += 0.05)
  {
    double const v = generator_adv_loss(d);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(PerceptualLoss, ClosedForms)
{
  auto const a = feature({0.5, -1.0, 2.0, 0.0});
  EXPECT_EQ(perceptual_loss(a, a), 0.0);
  auto const b = feature({1.5, 0.0, 3.0, 1.0});
  EXPECT_NEAR(perceptual_loss(a, b), 1.0, 1e-15);
  auto const c = feature({3.5, 2.0, 5.0, 3.0});
  EXPECT_NEAR(perceptual_loss(a, c), 9.0 * perceptual_loss(a, b), 1e-12);
  EXPECT_THROW(perceptual_loss(a, feature({1.0})), DimensionError);
}

TEST(JointLoss, WeightedSum)
{
  LossWeights const w;
  EXPECT_EQ(joint_loss(0, 0, 0, w), 0.0);
  EXPECT_NEAR(joint_loss(1, 1, 1, w), 1.0, 1e-12);
  LossWeights const no_per = LossWeights::with(0.001, 0.0);
  EXPECT_NEAR(joint_loss(2.0, 3.0, 100.0, no_per), 0.999 * 2.0 + 0.001 * 3.0, 1e-12);
}

TEST(JointLoss, Superposition)
{
  LossWeights const w  = LossWeights::with(0.01, 0.3);
  double const      a1 = joint_loss(1.0, 2.0, 3.0, w);
  double const      a2 = joint_loss(0.5, -1.0, 4.0, w);
  EXPECT_NEAR(joint_loss(1.5, 1.0, 7.0, w), a1 + a2, 1e-12);
}

TEST(TapeLosses, MatchScalarForms)
{
  SeededRng      rng(3);
  MaskSpec const m = make_center_mask(8, 8, 1);
  Tensor const   x = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
  Tensor const   z = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
  Tape           tape;
  Var const      pix = loss::pixel_l2(tape.leaf(z), x, m);
  EXPECT_NEAR(pix.value()[0], pixel_l2_loss(x, z, m), 1e-14);

  Tensor const real(Shape{2, 1}, std::vector<double>{0.9, 0.6});
  Tensor const fake(Shape{2, 1}, std::vector<double>{0.2, 0.4});
  Var const    dl = loss::discriminator(tape.leaf(real), tape.leaf(fake));
  EXPECT_NEAR(dl.value()[0], (discriminator_loss(0.9, 0.2) + discriminator_loss(0.6, 0.4)) / 2, 1e-14);
  Var const gl = loss::generator_adversarial(tape.leaf(fake));
  EXPECT_NEAR(gl.value()[0], (generator_adv_loss(0.2) + generator_adv_loss(0.4)) / 2, 1e-14);

  Tensor const fx(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor const fz(Shape{2, 3}, std::vector<double>{1, 3, 3, 4, 5, 9});
  Var const    pl = loss::perceptual(tape.leaf(fx), tape.leaf(fz));
  EXPECT_NEAR(pl.value()[0], (1.0 / 3.0 + 9.0 / 3.0) / 2.0, 1e-14);

  LossWeights const w;
  Var const         j = loss::joint(pix, gl, pl, w);
  EXPECT_NEAR(j.value()[0],
              joint_loss(pix.value()[0], gl.value()[0], pl.value()[0], w), 1e-14);
}

TEST(TapeLosses, GradientsAgreeWithFiniteDifferences)
{
  for (auto op : {GradCheckOp::PixelLoss, GradCheckOp::DiscriminatorLoss,
                  GradCheckOp::GeneratorAdversarialLoss, GradCheckOp::PerceptualLoss,
                  GradCheckOp::JointLoss})
  {
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
      auto const r = grad_check(op, seed, 1e-4);
      EXPECT_TRUE(r.passed) << to_string(op) << " seed " << seed << " error " << r.max_rel_error;
    }
  }
}

TEST(TapeLosses, PixelGradientVanishesOutsidePredictedRegion)
{
  SeededRng      rng(4);
  MaskSpec const m = make_center_mask(8, 8, 1);
  Tensor const   x = Tensor::uniform(Shape{1, 3, 8, 8}, rng, 0.0, 1.0);
  Tape           tape;
  Var const      z = tape.leaf(Tensor::uniform(Shape{1, 3, 8, 8}, rng, 0.0, 1.0), true);
  tape.run_backward(loss::pixel_l2(z, x, m));
  Tensor const g = tape.gradient(z);
  for (std::size_t c = 0; c < 3; ++c)
  {
    for (std::size_t i = 0; i < 64; ++i)
    {
      if (m.weights[i] == 0.0)
      {
        EXPECT_EQ(g[c * 64 + i], 0.0);
      }
      else
      {
        EXPECT_NE(g[c * 64 + i], 0.0);
      }
    }
  }
}
