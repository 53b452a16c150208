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
#include "casi/rng.hpp"
#include "casi/tensor.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace casi {

enum class NetworkKind
{
  Generator,
  Discriminator,
  Classifier,
};

std::string to_string(NetworkKind kind);

/// Declarative description of one of the three networks.
///
/// The generator is fully convolutional and accepts any H, W divisible by 8
/// unless the fc bottleneck is enabled, which pins the input size. The
/// discriminator and classifier always declare their input size.
struct NetworkSpec
{
  NetworkKind kind{NetworkKind::Generator};
  std::size_t base_channels{16};
  bool        with_residual{true};
  bool        with_fc_bottleneck{false};
  std::size_t fc_bottleneck_dim{0};  ///< 0 selects 8 * base_channels
  std::size_t input_channels{3};
  std::size_t num_classes{4};
  std::size_t input_height{0};
  std::size_t input_width{0};

  static NetworkSpec generator(std::size_t base_channels);
  static NetworkSpec discriminator(std::size_t base_channels, std::size_t height, std::size_t width);
  static NetworkSpec classifier(std::size_t base_channels, std::size_t num_classes,
                                std::size_t height, std::size_t width);

  std::size_t bottleneck_dim() const
  {
    return fc_bottleneck_dim ? fc_bottleneck_dim : 8 * base_channels;
  }

  /// Throws ContractError describing the first violated constraint.
  void validate() const;

  bool operator==(NetworkSpec const &) const = default;
};

enum class LayerKind
{
  Conv,
  Deconv,
  BatchNorm,
  Relu,
  LeakyRelu,
  Sigmoid,
  Tanh,
  Linear,
  Flatten,
  Unflatten,
  GlobalAvgPool,
  Softmax,
  Residual,
};

std::string to_string(LayerKind kind);

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct LayerDesc
{
  LayerKind   kind{LayerKind::Conv};
  std::string name;
  std::string block;  ///< down | flat | up | body | head
  std::size_t in_channels{0};
  std::size_t out_channels{0};
  std::size_t kernel{0};
  std::size_t stride{1};
  std::size_t pad{0};
  std::size_t weight{kNoIndex};  ///< parameter index (conv/deconv/linear weight, bn gamma)
  std::size_t bias{kNoIndex};    ///< parameter index (bias, bn beta)
  std::size_t stats{kNoIndex};   ///< running-stats index (bn)
  Shape       unflatten;         ///< [C,H,W] for Unflatten
  std::vector<LayerDesc> body;   ///< residual branch
};

struct Parameter
{
  std::string name;
  Tensor      value;

  bool operator==(Parameter const &) const = default;
};

/// A network instance: ordered layer descriptors bound to parameters and
/// batchnorm running statistics.
struct LayerStack
{
  NetworkSpec               spec;
  std::vector<LayerDesc>    layers;
  std::vector<Parameter>    params;
  std::vector<RunningStats> stats;
  std::vector<std::string>  stats_names;
  /// Number of top-level layers whose output is the feature (classifier).
  std::size_t feature_layers{0};
  /// Momentum and epsilon used by every batchnorm layer in train mode.
  BatchNormOptions batchnorm{};

  std::size_t         parameter_count() const;
  std::size_t         find_param(std::string const &name) const;  ///< kNoIndex if absent
  std::vector<Tensor> parameter_values() const;

  /// Top-level descriptors of a block, in order.
  std::vector<LayerDesc const *> block(std::string const &name) const;
  std::size_t                    residual_block_count() const;
};

/// Weights ~ N(0, 0.02), biases 0, batchnorm gamma ~ N(1, 0.02), beta 0,
/// drawn in layer order from `rng`.
LayerStack build_network(NetworkSpec const &spec, SeededRng &rng);

/// Parameters of a stack placed on a tape, index-aligned with
/// LayerStack::params.
struct BoundParams
{
  std::vector<Var> vars;
};

BoundParams bind(Tape &tape, LayerStack const &net, bool requires_grad);

/// Runs the first `end_layer` top-level layers (all by default). Train mode
/// updates batchnorm running statistics in `net`.
///
/// Throws ContractError when the input violates the network's size
/// constraint (generator: H, W divisible by 8; others: declared size).
Var forward(LayerStack &net, BoundParams const &bound, Var input, Mode mode,
            std::size_t end_layer = kNoIndex);

/// Gradient-free convenience wrapper.
Tensor forward(LayerStack &net, Tensor const &input, Mode mode);

/// Spatial size (H, W) at the end of the generator's down-sampling block for
/// an H x W input.
std::pair<std::size_t, std::size_t> downsampled_size(LayerStack &generator, std::size_t height,
                                                     std::size_t width);

/// Penultimate-layer activations with their C, H, W bookkeeping.
struct FeatureVector
{
  std::vector<double> values;
  std::size_t         channels{0};
  std::size_t         height{1};
  std::size_t         width{1};

  std::size_t size() const
  {
    return channels * height * width;
  }
};

/// Classifier feature for a single [3,H,W] image, eval mode.
FeatureVector extract_feature(LayerStack &classifier, Tensor const &image);

/// Differentiable feature rows [N, D] for a batch on a tape, eval mode.
Var feature_rows(LayerStack &classifier, BoundParams const &bound, Var images);

/// Class probabilities [N, K] for a batch, eval mode.
Tensor classify(LayerStack &classifier, Tensor const &images);

}  // namespace casi
