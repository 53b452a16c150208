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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace casi {

/// Builds a scalar loss from leaf inputs on a fresh tape. Must be a pure
/// function of the input values.
using LossBuilder = std::function<Var(Tape &, std::vector<Var> const &)>;

/// Compares reverse-mode gradients with central differences for every element
/// of every input flagged in `check`:
///   max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double max_relative_error(LossBuilder const &build, std::vector<Tensor> const &inputs,
                          std::vector<bool> const &check, double step = 1e-5);

/// Differentiable primitives and losses covered by the gradient suite.
enum class GradCheckOp
{
  Conv2d,
  TransposedConv2d,
  BatchNorm2dTrain,
  BatchNorm2dEval,
  Relu,
  LeakyRelu,
  Sigmoid,
  Tanh,
  Linear,
  GlobalAvgPool,
  Softmax,
  CrossEntropy,
  Crop,
  Compose,
  PixelLoss,
  DiscriminatorLoss,
  GeneratorAdversarialLoss,
  PerceptualLoss,
  JointLoss,
};

std::vector<GradCheckOp> all_grad_check_ops();
std::string              to_string(GradCheckOp op);

struct GradCheckReport
{
  GradCheckOp op;
  double      max_rel_error{0.0};
  double      tolerance{0.0};
  bool        passed{false};
};

/// Random small configuration of `op` drawn from `seed`, checked at `tol`.
GradCheckReport grad_check(GradCheckOp op, std::uint64_t seed, double tol = 1e-4);

/// Worst error per op over seeds [first_seed, first_seed + seeds).
std::vector<GradCheckReport> run_gradient_suite(std::uint64_t first_seed, std::size_t seeds,
                                                double tol = 1e-4);

}  // namespace casi
