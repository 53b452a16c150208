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
#include "casi/mask.hpp"
#include "casi/rng.hpp"

#include <algorithm>
#include <cmath>

namespace casi {

double max_relative_error(LossBuilder const &build, std::vector<Tensor> const &inputs,
                          std::vector<bool> const &check, double step)
{
  if (check.size() != inputs.size())
  {
    throw ContractError("max_relative_error: one check flag per input required");
  }

  auto evaluate = [&](std::vector<Tensor> const &values) {
    Tape             tape;
    std::vector<Var> leaves;
    for (auto const &v : values)
    {
      leaves.push_back(tape.leaf(v, false));
    }
    return build(tape, leaves).value()[0];
  };

  Tape             tape;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < inputs.size(); ++i)
  {
    leaves.push_back(tape.leaf(inputs[i], check[i]));
  }
  Var const loss = build(tape, leaves);
  tape.run_backward(loss);

  double              worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i)
  {
    if (!check[i])
    {
      continue;
    }
    Tensor const analytic = tape.gradient(leaves[i]);
    for (std::size_t j = 0; j < inputs[i].size(); ++j)
    {
      double const original = inputs[i][j];
      probe[i][j]           = original + step;
      double const plus     = evaluate(probe);
      probe[i][j]           = original - step;
      double const minus    = evaluate(probe);
      probe[i][j]           = original;

      double const numeric = (plus - minus) / (2.0 * step);
      double const a       = analytic[j];
      double const denom   = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst                = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

std::vector<GradCheckOp> all_grad_check_ops()
{
  return {GradCheckOp::Conv2d,
          GradCheckOp::TransposedConv2d,
          GradCheckOp::BatchNorm2dTrain,
          GradCheckOp::BatchNorm2dEval,
          GradCheckOp::Relu,
          GradCheckOp::LeakyRelu,
          GradCheckOp::Sigmoid,
          GradCheckOp::Tanh,
          GradCheckOp::Linear,
          GradCheckOp::GlobalAvgPool,
          GradCheckOp::Softmax,
          GradCheckOp::CrossEntropy,
          GradCheckOp::Crop,
          GradCheckOp::Compose,
          GradCheckOp::PixelLoss,
          GradCheckOp::DiscriminatorLoss,
          GradCheckOp::GeneratorAdversarialLoss,
          GradCheckOp::PerceptualLoss,
          GradCheckOp::JointLoss};
}

std::string to_string(GradCheckOp op)
{
  switch (op)
  {
  case GradCheckOp::Conv2d:
    return "conv2d";
  case GradCheckOp::TransposedConv2d:
    return "transposed_conv2d";
  case GradCheckOp::BatchNorm2dTrain:
    return "batchnorm2d(train)";
  case GradCheckOp::BatchNorm2dEval:
    return "batchnorm2d(eval)";
  case GradCheckOp::Relu:
    return "relu";
  case GradCheckOp::LeakyRelu:
    return "leakyrelu";
  case GradCheckOp::Sigmoid:
    return "sigmoid";
  case GradCheckOp::Tanh:
    return "tanh";
  case GradCheckOp::Linear:
    return "linear";
  case GradCheckOp::GlobalAvgPool:
    return "global_avg_pool";
  case GradCheckOp::Softmax:
    return "softmax";
  case GradCheckOp::CrossEntropy:
    return "cross_entropy";
  case GradCheckOp::Crop:
    return "crop";
  case GradCheckOp::Compose:
    return "compose";
  case GradCheckOp::PixelLoss:
    return "pixel_l2_loss";
  case GradCheckOp::DiscriminatorLoss:
    return "discriminator_loss";
  case GradCheckOp::GeneratorAdversarialLoss:
    return "generator_adv_loss";
  case GradCheckOp::PerceptualLoss:
    return "perceptual_loss";
  case GradCheckOp::JointLoss:
    return "joint_loss";
  }
  return "unknown";
}

namespace {

// values bounded away from zero so ReLU kinks stay outside the FD stencil
Tensor away_from_zero(Shape shape, SeededRng &rng)
{
  Tensor t(std::move(shape));
  for (auto &v : t.data())
  {
    double const u = rng.uniform(-1.0, 1.0);
    v              = (u < 0 ? -1.0 : 1.0) * (0.05 + 0.95 * std::abs(u));
  }
  return t;
}

// loss = sum(out * projection): every output element gets an O(1) weight
Var project(Tape &tape, Var out, Tensor const &projection)
{
  return ops::sum(ops::mul(out, tape.leaf(projection)));
}

struct Case
{
  LossBuilder         build;
  std::vector<Tensor> inputs;
  std::vector<bool>   check;
};

Case make_case(GradCheckOp op, SeededRng &rng)
{
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };

  switch (op)
  {
  case GradCheckOp::Conv2d: {
    std::size_t const n = pick(1, 2), c = pick(1, 3), k = pick(1, 3);
    std::size_t const kh = pick(1, 4), s = pick(1, 2), p = pick(0, 1);
    std::size_t const h  = (pick(2, 4) - 1) * s + kh - 2 * p;
    std::size_t const w  = (pick(2, 4) - 1) * s + kh - 2 * p;
    std::size_t const oh = (h + 2 * p - kh) / s + 1, ow = (w + 2 * p - kh) / s + 1;
    Tensor const      proj = Tensor::randn(Shape{n, k, oh, ow}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::conv2d(v[0], v[1], v[2], s, p), proj);
            },
            {Tensor::randn(Shape{n, c, h, w}, rng), Tensor::randn(Shape{k, c, kh, kh}, rng),
             Tensor::randn(Shape{k}, rng)},
            {true, true, true}};
  }
  case GradCheckOp::TransposedConv2d: {
    std::size_t const n = pick(1, 2), c = pick(1, 3), k = pick(1, 3);
    std::size_t const kh = pick(2, 4), s = pick(1, 2), p = pick(0, 1);
    std::size_t const h = pick(2, 4), w = pick(2, 4);
    std::size_t const oh = (h - 1) * s + kh - 2 * p, ow = (w - 1) * s + kh - 2 * p;
    Tensor const      proj = Tensor::randn(Shape{n, k, oh, ow}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::transposed_conv2d(v[0], v[1], v[2], s, p), proj);
            },
            {Tensor::randn(Shape{n, c, h, w}, rng), Tensor::randn(Shape{c, k, kh, kh}, rng),
             Tensor::randn(Shape{k}, rng)},
            {true, true, true}};
  }
  case GradCheckOp::BatchNorm2dTrain:
  case GradCheckOp::BatchNorm2dEval: {
    bool const        train = op == GradCheckOp::BatchNorm2dTrain;
    std::size_t const n = pick(2, 3), c = pick(1, 3), h = pick(2, 3), w = pick(2, 3);
    Tensor const      proj = Tensor::randn(Shape{n, c, h, w}, rng);
    RunningStats      stats(c);
    for (std::size_t i = 0; i < c; ++i)
    {
      stats.mean[i] = rng.normal();
      stats.var[i]  = rng.uniform(0.5, 2.0);
    }
    return {[=](Tape &t, std::vector<Var> const &v) {
              RunningStats local = stats;
              return project(t,
                             ops::batchnorm2d(v[0], v[1], v[2], train ? Mode::Train : Mode::Eval,
                                              local),
                             proj);
            },
            {Tensor::randn(Shape{n, c, h, w}, rng), Tensor::randn(Shape{c}, rng, 1.0, 0.3),
             Tensor::randn(Shape{c}, rng)},
            {true, true, true}};
  }
  case GradCheckOp::Relu:
  case GradCheckOp::LeakyRelu:
  case GradCheckOp::Sigmoid:
  case GradCheckOp::Tanh: {
    Activation const kind = op == GradCheckOp::Relu        ? Activation::Relu
                            : op == GradCheckOp::LeakyRelu ? Activation::LeakyRelu
                            : op == GradCheckOp::Sigmoid   ? Activation::Sigmoid
                                                           : Activation::Tanh;
    Shape const  shape{pick(1, 2), pick(1, 3), pick(2, 4), pick(2, 4)};
    Tensor const proj = Tensor::randn(shape, rng);
    Tensor       x    = away_from_zero(shape, rng);
    for (auto &v : x.data())
    {
      v *= 3.0;
    }
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::activation(kind, v[0]), proj);
            },
            {x},
            {true}};
  }
  case GradCheckOp::Linear: {
    std::size_t const n = pick(1, 4), d = pick(1, 5), e = pick(1, 5);
    Tensor const      proj = Tensor::randn(Shape{n, e}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::linear(v[0], v[1], v[2]), proj);
            },
            {Tensor::randn(Shape{n, d}, rng), Tensor::randn(Shape{d, e}, rng),
             Tensor::randn(Shape{e}, rng)},
            {true, true, true}};
  }
  case GradCheckOp::GlobalAvgPool: {
    std::size_t const n = pick(1, 2), c = pick(1, 3);
    Tensor const      proj = Tensor::randn(Shape{n, c}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::global_avg_pool(v[0]), proj);
            },
            {Tensor::randn(Shape{n, c, pick(1, 4), pick(1, 4)}, rng)},
            {true}};
  }
  case GradCheckOp::Softmax: {
    Shape const  shape{pick(1, 3), pick(2, 5)};
    Tensor const proj = Tensor::randn(shape, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::softmax(v[0]), proj);
            },
            {Tensor::randn(shape, rng)},
            {true}};
  }
  case GradCheckOp::CrossEntropy: {
    std::size_t const        n = pick(1, 4), k = pick(2, 5);
    std::vector<std::size_t> labels(n);
    for (auto &l : labels)
    {
      l = rng.below(k);
    }
    return {[=](Tape &, std::vector<Var> const &v) { return ops::cross_entropy(v[0], labels); },
            {Tensor::randn(Shape{n, k}, rng)},
            {true}};
  }
  case GradCheckOp::Crop: {
    std::size_t const h = pick(3, 6), w = pick(3, 6);
    std::size_t const ch = pick(1, h - 1), cw = pick(1, w - 1);
    std::size_t const top = rng.below(h - ch + 1), left = rng.below(w - cw + 1);
    Tensor const      proj = Tensor::randn(Shape{1, 2, ch, cw}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::crop(v[0], top, left, ch, cw), proj);
            },
            {Tensor::randn(Shape{1, 2, h, w}, rng)},
            {true}};
  }
  case GradCheckOp::Compose: {
    std::size_t const h = pick(2, 5), w = pick(2, 5);
    Tensor            mask(Shape{h, w});
    for (auto &m : mask.data())
    {
      m = static_cast<double>(rng.below(2));
    }
    Tensor const proj = Tensor::randn(Shape{2, 3, h, w}, rng);
    return {[=](Tape &t, std::vector<Var> const &v) {
              return project(t, ops::compose(v[0], v[1], mask), proj);
            },
            {Tensor::randn(Shape{2, 3, h, w}, rng), Tensor::randn(Shape{2, 3, h, w}, rng)},
            {true, true}};
  }
  case GradCheckOp::PixelLoss: {
    MaskSpec const mask   = make_center_mask(8, 8, pick(0, 1));
    Tensor const   target = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
    return {[=](Tape &, std::vector<Var> const &v) { return loss::pixel_l2(v[0], target, mask); },
            {Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0)},
            {true}};
  }
  case GradCheckOp::DiscriminatorLoss: {
    std::size_t const n = pick(1, 4);
    return {[](Tape &, std::vector<Var> const &v) { return loss::discriminator(v[0], v[1]); },
            {Tensor::uniform(Shape{n, 1}, rng, 0.05, 0.95),
             Tensor::uniform(Shape{n, 1}, rng, 0.05, 0.95)},
            {true, true}};
  }
  case GradCheckOp::GeneratorAdversarialLoss: {
    std::size_t const n = pick(1, 4);
    return {[](Tape &, std::vector<Var> const &v) { return loss::generator_adversarial(v[0]); },
            {Tensor::uniform(Shape{n, 1}, rng, 0.05, 0.95)},
            {true}};
  }
  case GradCheckOp::PerceptualLoss: {
    Shape const shape{pick(1, 3), pick(1, 8)};
    return {[](Tape &, std::vector<Var> const &v) { return loss::perceptual(v[0], v[1]); },
            {Tensor::randn(shape, rng), Tensor::randn(shape, rng)},
            {true, true}};
  }
  case GradCheckOp::JointLoss: {
    // 8x8 toy pipeline: sigmoid "generator" output, linear stand-ins for D and F
    std::size_t const n       = pick(1, 2);
    MaskSpec const    mask    = make_center_mask(8, 8, 1);
    Tensor const      x       = Tensor::uniform(Shape{n, 3, 8, 8}, rng, 0.0, 1.0);
    Tensor const      d_w     = Tensor::randn(Shape{192, 1}, rng, 0.0, 0.1);
    Tensor const      f_w     = Tensor::randn(Shape{192, 4}, rng, 0.0, 0.1);
    LossWeights const weights = LossWeights::with(0.1, 0.3);
    return {[=](Tape &t, std::vector<Var> const &v) {
              Var const g    = ops::activation(Activation::Sigmoid, v[0]);
              Var const xv   = t.leaf(x);
              Var const z    = ops::compose(xv, g, mask.mask);
              Var const flat = ops::reshape(z, Shape{n, 192});
              Var const d    = ops::activation(
                  Activation::Sigmoid, ops::linear(flat, t.leaf(d_w), t.leaf(Tensor(Shape{1}))));
              Var const f_z = ops::linear(flat, t.leaf(f_w), t.leaf(Tensor(Shape{4})));
              Var const f_x = ops::linear(ops::reshape(xv, Shape{n, 192}), t.leaf(f_w),
                                          t.leaf(Tensor(Shape{4})));
              return loss::joint(loss::pixel_l2(g, x, mask), loss::generator_adversarial(d),
                                 loss::perceptual(f_x, f_z), weights);
            },
            {Tensor::randn(Shape{n, 3, 8, 8}, rng)},
            {true}};
  }
  }
  throw ContractError("unknown gradient-check op");
}

}  // namespace

GradCheckReport grad_check(GradCheckOp op, std::uint64_t seed, double tol)
{
  SeededRng       rng(seed * 1000003ULL + static_cast<std::uint64_t>(op));
  Case const      c = make_case(op, rng);
  GradCheckReport report{op, max_relative_error(c.build, c.inputs, c.check), tol, false};
  report.passed = report.max_rel_error <= tol;
  return report;
}

std::vector<GradCheckReport> run_gradient_suite(std::uint64_t first_seed, std::size_t seeds,
                                                double tol)
{
  std::vector<GradCheckReport> out;
  for (auto op : all_grad_check_ops())
  {
    GradCheckReport worst{op, 0.0, tol, true};
    for (std::size_t s = 0; s < seeds; ++s)
    {
      auto const r        = grad_check(op, first_seed + s, tol);
      worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
    }
    worst.passed = worst.max_rel_error <= tol;
    out.push_back(worst);
  }
  return out;
}

}  // namespace casi
