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
#include "casi/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace casi;

namespace {

LayerDesc const &find_layer(LayerStack const &net, std::string const &name)
{
  auto it = std::find_if(net.layers.begin(), net.layers.end(),
                         [&](LayerDesc const &l) { return l.name == name; });
  if (it == net.layers.end())
  {
    throw std::runtime_error("no layer " + name);
  }
  return *it;
}

}  // namespace

TEST(Mask, CenterMaskDefaultGeometry)
{
  MaskSpec const m = make_center_mask(128, 128, 4);
  EXPECT_EQ(m.missing, (Region{32, 32, 64, 64}));
  EXPECT_EQ(m.predicted, (Region{28, 28, 72, 72}));
  EXPECT_EQ(m.missing_count(), 64u * 64u);

  std::size_t ring = 0, inner = 0;
  for (double w : m.weights.values())
  {
    ring += w == kOverlapWeight ? 1 : 0;
    inner += w == 1.0 ? 1 : 0;
  }
  EXPECT_EQ(ring, 72u * 72u - 64u * 64u);
  EXPECT_EQ(inner, 64u * 64u);
  EXPECT_DOUBLE_EQ(m.weight_sum(), 4096.0 + 10.0 * 1088.0);
}

TEST(Mask, NoOverlapHasNoRing)
{
  MaskSpec const m = make_center_mask(8, 8, 0);
  EXPECT_EQ(m.missing, (Region{2, 2, 4, 4}));
  EXPECT_EQ(m.predicted, m.missing);
  EXPECT_EQ(m.weights, m.mask);
}

TEST(Mask, ValuesAreExactlyBinary)
{
  MaskSpec const m = make_center_mask(16, 24, 2);
  for (double v : m.mask.values())
  {
    EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
}

TEST(Mask, RejectsOddSizeAndOversizedRing)
{
  EXPECT_THROW(make_center_mask(9, 8, 0), ContractError);
  EXPECT_THROW(make_center_mask(8, 8, 3), ContractError);
  EXPECT_NO_THROW(make_center_mask(8, 8, 2));
}

TEST(Mask, FromTensorUsesBoundingBox)
{
  Tensor t(Shape{6, 6}, 0.0);
  t[1 * 6 + 2] = 1.0;
  t[3 * 6 + 4] = 1.0;
  MaskSpec const m = mask_from_tensor(t);
  EXPECT_EQ(m.missing, (Region{1, 2, 3, 3}));
  EXPECT_EQ(m.missing_count(), 2u);
  t[0] = 0.5;
  EXPECT_THROW(mask_from_tensor(t), ContractError);
  EXPECT_THROW(mask_from_tensor(Tensor(Shape{4, 4}, 0.0)), ContractError);
}

TEST(Compose, EmptyAndFullMask)
{
  SeededRng    rng(1);
  Tensor const x = Tensor::uniform(Shape{2, 3, 4, 4}, rng, 0.0, 1.0);
  Tensor const g = Tensor::uniform(Shape{2, 3, 4, 4}, rng, 0.0, 1.0);
  EXPECT_EQ(compose(x, g, Tensor(Shape{4, 4}, 0.0)), x);
  EXPECT_EQ(compose(x, g, Tensor(Shape{4, 4}, 1.0)), g);
}

TEST(Compose, LeftHalfMask)
{
  Tensor const x(Shape{3, 2, 4}, 0.25);
  Tensor const g(Shape{3, 2, 4}, 0.75);
  Tensor       mask(Shape{2, 4}, 0.0);
  for (std::size_t y = 0; y < 2; ++y)
  {
    mask[y * 4 + 0] = mask[y * 4 + 1] = 1.0;
  }
  Tensor const z = compose(x, g, mask);
  for (std::size_t c = 0; c < 3; ++c)
  {
    for (std::size_t y = 0; y < 2; ++y)
    {
      for (std::size_t xx = 0; xx < 4; ++xx)
      {
        EXPECT_EQ(z[(c * 2 + y) * 4 + xx], xx < 2 ? 0.75 : 0.25);
      }
    }
  }
}

TEST(Compose, ShapeMismatchThrows)
{
  EXPECT_THROW(compose(Tensor(Shape{3, 4, 4}), Tensor(Shape{3, 4, 5}), Tensor(Shape{4, 4})),
               DimensionError);
  EXPECT_THROW(compose(Tensor(Shape{3, 4, 4}), Tensor(Shape{3, 4, 4}), Tensor(Shape{4, 5})),
               DimensionError);
}

TEST(Compose, ContextCopiedBitExactlyFromGeneratorOutput)
{
  SeededRng     rng(2);
  LayerStack    g = build_network(NetworkSpec::generator(4), rng);
  Tensor const  x = Tensor::uniform(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
  MaskSpec const m = make_center_mask(16, 16, 2);
  Tensor const  out = forward(g, x, Mode::Eval);
  Tensor const  z   = compose(x, out, m.mask);
  for (std::size_t c = 0; c < 3; ++c)
  {
    for (std::size_t i = 0; i < 256; ++i)
    {
      if (m.mask[i] == 0.0)
      {
        ASSERT_EQ(z[c * 256 + i], x[c * 256 + i]);
      }
    }
  }
  EXPECT_EQ(compose(x, out, Tensor(Shape{16, 16}, 0.0)), x);
}

TEST(NetworkSpec, ValidateRejectsBadSpecs)
{
  auto g = NetworkSpec::generator(3);
  EXPECT_THROW(g.validate(), ContractError);
  auto d = NetworkSpec::discriminator(16, 7, 8);
  EXPECT_THROW(d.validate(), ContractError);
  auto c = NetworkSpec::classifier(16, 1, 32, 32);
  EXPECT_THROW(c.validate(), ContractError);
  auto f           = NetworkSpec::generator(8);
  f.with_fc_bottleneck = true;
  EXPECT_THROW(f.validate(), ContractError);
}

TEST(Generator, DownsamplesToOneEighth)
{
  SeededRng  rng(3);
  LayerStack g = build_network(NetworkSpec::generator(4), rng);
  EXPECT_EQ(downsampled_size(g, 128, 128), (std::pair<std::size_t, std::size_t>{16, 16}));
  EXPECT_EQ(downsampled_size(g, 160, 96), (std::pair<std::size_t, std::size_t>{20, 12}));
}

TEST(Generator, OutputShapeMatchesInputForVariableSizes)
{
  SeededRng  rng(4);
  LayerStack g = build_network(NetworkSpec::generator(4), rng);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{64, 64}, {128, 128}, {160, 96}, {8, 24}})
  {
    Tensor const out = forward(g, Tensor(Shape{1, 3, h, w}, 0.5), Mode::Eval);
    EXPECT_EQ(out.shape(), (Shape{1, 3, h, w}));
    for (double v : out.values())
    {
      ASSERT_GT(v, 0.0);
      ASSERT_LT(v, 1.0);
    }
  }
}

TEST(Generator, RejectsSizeNotDivisibleByEight)
{
  SeededRng  rng(5);
  LayerStack g = build_network(NetworkSpec::generator(4), rng);
  try
  {
    forward(g, Tensor(Shape{1, 3, 20, 16}, 0.5), Mode::Eval);
    FAIL() << "expected ContractError";
  }
  catch (ContractError const &e)
  {
    EXPECT_NE(std::string(e.what()).find("divisible by 8"), std::string::npos);
  }
}

TEST(Generator, WithoutResidualHasNoResidualBlocks)
{
  SeededRng   rng(6);
  NetworkSpec spec   = NetworkSpec::generator(4);
  LayerStack  full   = build_network(spec, rng);
  spec.with_residual = false;
  LayerStack minus   = build_network(spec, rng);
  EXPECT_EQ(full.residual_block_count(), 2u);
  EXPECT_EQ(minus.residual_block_count(), 0u);
  EXPECT_LT(minus.parameter_count(), full.parameter_count());
}

TEST(Generator, ChannelBookkeeping)
{
  SeededRng         rng(7);
  std::size_t const cb = 8;
  LayerStack const  g  = build_network(NetworkSpec::generator(cb), rng);
  EXPECT_EQ(find_layer(g, "down.conv1").out_channels, cb);
  for (auto const *name : {"down.conv3", "down.conv5"})
  {
    auto const &l = find_layer(g, name);
    EXPECT_EQ(l.kernel, 4u);
    EXPECT_EQ(l.out_channels, 2 * l.in_channels) << name;
  }
  EXPECT_EQ(find_layer(g, "flat.conv1").in_channels, find_layer(g, "flat.conv3").out_channels);
  EXPECT_EQ(find_layer(g, "flat.conv2").out_channels, 2 * find_layer(g, "flat.conv2").in_channels);
  EXPECT_EQ(find_layer(g, "flat.conv3").out_channels, find_layer(g, "flat.conv3").in_channels / 2);
  for (auto const *name : {"up.conv1", "up.conv2"})
  {
    auto const &l = find_layer(g, name);
    EXPECT_EQ(l.kernel, 3u);
    EXPECT_EQ(l.out_channels * 2, l.in_channels) << name;
  }
  EXPECT_EQ(find_layer(g, "up.conv3").out_channels, 3u);
}

TEST(Generator, EveryHiddenConvFollowedByBatchnormAndRelu)
{
  SeededRng        rng(8);
  LayerStack const g = build_network(NetworkSpec::generator(4), rng);
  auto const      &L = g.layers;
  for (std::size_t i = 0; i + 1 < L.size(); ++i)
  {
    if ((L[i].kind == LayerKind::Conv || L[i].kind == LayerKind::Deconv) && L[i].name != "up.conv3")
    {
      ASSERT_LT(i + 2, L.size());
      EXPECT_EQ(L[i + 1].kind, LayerKind::BatchNorm) << L[i].name;
      EXPECT_EQ(L[i + 2].kind, LayerKind::Relu) << L[i].name;
    }
  }
  EXPECT_EQ(L.back().kind, LayerKind::Sigmoid);
}

TEST(Generator, FcBottleneckWithIdentityEmbeddingMatchesPlainGenerator)
{
  std::size_t const cb = 4;
  std::size_t const hw = 16;
  std::size_t const flat = 8 * cb * (hw / 8) * (hw / 8);
  SeededRng         rng(9);
  NetworkSpec       plain_spec = NetworkSpec::generator(cb);
  LayerStack        plain      = build_network(plain_spec, rng);

  NetworkSpec fc_spec        = plain_spec;
  fc_spec.with_fc_bottleneck = true;
  fc_spec.fc_bottleneck_dim  = flat;
  fc_spec.input_height = fc_spec.input_width = hw;
  LayerStack fc                              = build_network(fc_spec, rng);
  EXPECT_EQ(fc.parameter_count(), plain.parameter_count() + 2 * (flat * flat + flat));

  // tanh(eps * v) / eps == v up to eps^2 v^3 / 3
  double const eps = 1e-4;
  for (auto &p : fc.params)
  {
    std::size_t const src = plain.find_param(p.name);
    if (src != kNoIndex)
    {
      p.value = plain.params[src].value;
      continue;
    }
    p.value.fill(0.0);
    if (p.name == "flat.fc1.weight" || p.name == "flat.fc2.weight")
    {
      double const d = p.name == "flat.fc1.weight" ? eps : 1.0 / eps;
      for (std::size_t i = 0; i < flat; ++i)
      {
        p.value[i * flat + i] = d;
      }
    }
  }
  Tensor const x = Tensor::uniform(Shape{2, 3, hw, hw}, rng, 0.0, 1.0);
  Tensor const a = forward(plain, x, Mode::Eval);
  Tensor const b = forward(fc, x, Mode::Eval);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    ASSERT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Generator, FcBottleneckPinsInputSize)
{
  SeededRng   rng(10);
  NetworkSpec spec        = NetworkSpec::generator(4);
  spec.with_fc_bottleneck = true;
  spec.input_height = spec.input_width = 16;
  LayerStack g                         = build_network(spec, rng);
  EXPECT_NO_THROW(forward(g, Tensor(Shape{1, 3, 16, 16}, 0.5), Mode::Eval));
  EXPECT_THROW(forward(g, Tensor(Shape{1, 3, 24, 16}, 0.5), Mode::Eval), ContractError);
}

TEST(Discriminator, ParameterCountMatchesLayerArithmetic)
{
  // 72 -> 36 -> 18 -> 9: three 4x4/s2 convs with batchnorm, then fc over 64x9x9
  std::size_t const conv1 = 3 * 16 * 16 + 16 + 2 * 16;
  std::size_t const conv2 = 16 * 32 * 16 + 32 + 2 * 32;
  std::size_t const conv3 = 32 * 64 * 16 + 64 + 2 * 64;
  std::size_t const fc    = 64 * 9 * 9 + 1;
  ASSERT_EQ(conv1 + conv2 + conv3 + fc, 47249u);

  SeededRng        rng(11);
  LayerStack const d = build_network(NetworkSpec::discriminator(16, 72, 72), rng);
  EXPECT_EQ(d.parameter_count(), 47249u);
  EXPECT_EQ(d.layers.back().kind, LayerKind::Sigmoid);
}

TEST(Discriminator, OutputsOneProbabilityPerSample)
{
  SeededRng  rng(12);
  LayerStack d   = build_network(NetworkSpec::discriminator(8, 20, 20), rng);
  Tensor const out = forward(d, Tensor::uniform(Shape{3, 3, 20, 20}, rng, 0.0, 1.0), Mode::Eval);
  EXPECT_EQ(out.shape(), (Shape{3, 1}));
  for (double v : out.values())
  {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(forward(d, Tensor(Shape{1, 3, 24, 24}, 0.5), Mode::Eval), ContractError);
}

TEST(Discriminator, HiddenConvsUseLeakyRelu)
{
  SeededRng        rng(13);
  LayerStack const d = build_network(NetworkSpec::discriminator(8, 32, 32), rng);
  for (std::size_t i = 0; i < d.layers.size(); ++i)
  {
    if (d.layers[i].kind == LayerKind::Conv)
    {
      EXPECT_EQ(d.layers[i].kernel, 4u);
      EXPECT_EQ(d.layers[i + 1].kind, LayerKind::BatchNorm);
      EXPECT_EQ(d.layers[i + 2].kind, LayerKind::LeakyRelu);
    }
  }
}

TEST(Classifier, ProbabilitiesSumToOne)
{
  SeededRng    rng(14);
  LayerStack   c = build_network(NetworkSpec::classifier(8, 4, 32, 32), rng);
  Tensor const p = classify(c, Tensor::uniform(Shape{5, 3, 32, 32}, rng, 0.0, 1.0));
  ASSERT_EQ(p.shape(), (Shape{5, 4}));
  for (std::size_t n = 0; n < 5; ++n)
  {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
    {
      s += p[n * 4 + k];
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Classifier, FeatureIsDeterministicWithPenultimateWidth)
{
  SeededRng    rng(15);
  std::size_t const cb = 8;
  LayerStack   c     = build_network(NetworkSpec::classifier(cb, 4, 32, 32), rng);
  Tensor const img   = Tensor::uniform(Shape{3, 32, 32}, rng, 0.0, 1.0);
  auto const   a     = extract_feature(c, img);
  auto const   b     = extract_feature(c, img);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values.size(), 8 * cb);
  EXPECT_EQ(a.size(), 8 * cb);
  EXPECT_EQ(a.height, 1u);
  EXPECT_EQ(a.width, 1u);
}

TEST(Network, SameSeedSameParameters)
{
  SeededRng a(16), b(16);
  EXPECT_EQ(build_network(NetworkSpec::generator(4), a).params,
            build_network(NetworkSpec::generator(4), b).params);
}

TEST(Network, TrainModeUpdatesRunningStatsEvalDoesNot)
{
  SeededRng    rng(17);
  LayerStack   g = build_network(NetworkSpec::generator(4), rng);
  auto const   before = g.stats;
  Tensor const x      = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
  forward(g, x, Mode::Eval);
  EXPECT_EQ(g.stats, before);
  forward(g, x, Mode::Train);
  EXPECT_NE(g.stats, before);
}
