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
#include <functional>
#include <map>
#include <string_view>
#include <vector>

namespace casi {

enum class OpKind
{
  Leaf,
  Conv2d,
  TransposedConv2d,
  BatchNorm2d,
  Relu,
  LeakyRelu,
  Sigmoid,
  Tanh,
  Linear,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Sum,
  Log,
  Reshape,
  Crop,
  Compose,
  GlobalAvgPool,
  Softmax,
  CrossEntropy,
  WeightedSquaredError,
};

std::string_view op_name(OpKind kind);

class Tape;

/// Handle to a value recorded on a Tape.
struct Var
{
  Tape       *tape{nullptr};
  std::size_t id{0};

  Tensor const &value() const;
  Shape const  &shape() const
  {
    return value().shape();
  }
};

/// Ordered record of primitive applications. Records are appended in
/// evaluation order, so every input id is smaller than its consumer's id and
/// reverse iteration is a valid backward schedule. Single-threaded.
class Tape
{
public:
  /// Accumulates the gradient of one record into its inputs' gradient buffers.
  using BackwardFn = std::function<void(Tape &, Tensor const &grad_output)>;

  Tape() = default;
  Tape(Tape const &)            = delete;
  Tape &operator=(Tape const &) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  /// Appends a record. `backward` is dropped when no input needs a gradient.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

  Tensor const &value(std::size_t id) const
  {
    return nodes_.at(id).value;
  }
  bool requires_grad(std::size_t id) const
  {
    return nodes_.at(id).requires_grad;
  }
  OpKind kind(std::size_t id) const
  {
    return nodes_.at(id).kind;
  }
  std::vector<std::size_t> const &inputs(std::size_t id) const
  {
    return nodes_.at(id).inputs;
  }
  std::size_t size() const noexcept
  {
    return nodes_.size();
  }

  /// Mutable gradient buffer for `id`, zero-initialised on first access.
  /// Only meaningful inside a backward pass.
  Tensor &grad_buffer(std::size_t id);

  /// Gradient of the last backward pass w.r.t. `v`; zeros if none reached it.
  Tensor gradient(Var v) const;

  /// Reverse sweep from a scalar loss. Throws ContractError if `loss` is not
  /// a single-element tensor on this tape.
  void run_backward(Var loss);

  void clear()
  {
    nodes_.clear();
  }

private:
  struct Node
  {
    OpKind                   kind{OpKind::Leaf};
    std::vector<std::size_t> inputs;
    Tensor                   value;
    bool                     requires_grad{false};
    bool                     is_leaf{true};
    Tensor                   grad;
    bool                     has_grad{false};
    BackwardFn               backward;
  };

  std::vector<Node> nodes_;
};

/// Runs the backward pass and returns the gradient of every requires_grad
/// leaf, keyed by tape id. Leaves that do not reach the loss get zeros.
std::map<std::size_t, Tensor> backward(Tape &tape, Var loss);

enum class Mode
{
  Train,
  Eval,
};

/// Per-channel running statistics owned by a batchnorm layer.
struct RunningStats
{
  Tensor mean;
  Tensor var;

  explicit RunningStats(std::size_t channels = 1)
    : mean(Shape{channels}, 0.0)
    , var(Shape{channels}, 1.0)
  {}

  bool operator==(RunningStats const &) const = default;
};

struct BatchNormOptions
{
  double momentum{0.1};
  double eps{1e-5};
};

enum class Activation
{
  Relu,
  LeakyRelu,
  Sigmoid,
  Tanh,
};

inline constexpr double kLeakySlope = 0.2;

namespace ops {

/// input [N,C,H,W], weight [K,C,kh,kw], bias [K].
Var conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t pad);

/// input [N,C,H,W], weight [C,K,kh,kw], bias [K]; output spatial size
/// (H-1)*stride - 2*pad + kh.
Var transposed_conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t pad);

/// Per-channel normalisation over N, H, W. Train mode uses batch statistics
/// (biased variance) and updates `stats`; eval mode reads `stats`.
Var batchnorm2d(Var input, Var gamma, Var beta, Mode mode, RunningStats &stats,
                BatchNormOptions const &options = {});

Var activation(Activation kind, Var x, double slope = kLeakySlope);

/// x [N,D], w [D,E], b [E].
Var linear(Var x, Var w, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var sum(Var a);
Var mean(Var a);

/// Natural log of `a` clamped to [lo, hi]; the gradient is zero where the
/// clamp is active.
Var log_clamped(Var a, double lo, double hi);

Var reshape(Var a, Shape shape);

/// NCHW spatial crop.
Var crop(Var a, std::size_t top, std::size_t left, std::size_t height, std::size_t width);

/// Elementwise select over NCHW: mask[h,w] == 1 takes `generated`, otherwise
/// `context`. The mask is [H,W] and broadcast over N and C. Context pixels are
/// copied, never recomputed.
Var compose(Var context, Var generated, Tensor const &mask);

/// [N,C,H,W] -> [N,C]
Var global_avg_pool(Var a);

/// Row-wise normalised exponential over [N,K].
Var softmax(Var logits);

/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::vector<std::size_t> const &labels);

/// sum_{n,c,h,w} weights[h,w] * (a - target)^2 / normaliser; `target` is a
/// constant tensor of the same shape as `a`.
Var weighted_squared_error(Var a, Tensor const &target, Tensor const &weights, double normaliser);

}  // namespace ops
}  // namespace casi
