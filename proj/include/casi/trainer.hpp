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

#include "casi/adam.hpp"
#include "casi/checkpoint.hpp"
#include "casi/image.hpp"
#include "casi/losses.hpp"
#include "casi/mask.hpp"
#include "casi/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace casi {

enum class Variant
{
  Casi,       ///< fully convolutional with residual blocks
  CasiMinus,  ///< residual blocks removed
  CasiFc,     ///< fc bottleneck inserted into the flatting block
};

std::string to_string(Variant v);
Variant     parse_variant(std::string const &text);

struct TrainConfig
{
  std::size_t   max_iterations{300};
  std::size_t   d_iters{1};
  std::size_t   batch_size{8};
  std::size_t   image_size{32};
  std::size_t   overlap{4};
  LossWeights   weights{};
  AdamHyper     adam{};
  std::uint64_t seed{0};
  Variant       variant{Variant::Casi};
  std::size_t   base_channels{16};
  std::size_t   checkpoint_interval{0};  ///< 0 writes only the final checkpoint
  std::string   manifest;
  std::string   classifier;  ///< classifier checkpoint path

  /// Throws ContractError for d_iters < 1, batch_size < 1, image_size not a
  /// multiple of 8, or invalid loss weights.
  void validate() const;

  NetworkSpec generator_spec() const;
  NetworkSpec discriminator_spec() const;
  MaskSpec    mask() const;

  /// Sorted `key=value` lines covering every field.
  std::string canonical() const;
  /// FNV-1a of the canonical lines that affect the training trajectory
  /// (everything except max_iterations, checkpoint_interval and paths).
  std::uint64_t fingerprint() const;

  bool operator==(TrainConfig const &) const = default;
};

/// Sets one field from its canonical key. Throws ContractError for unknown
/// keys or unparsable values.
void set_config_value(TrainConfig &cfg, std::string const &key, std::string const &value);

/// Parses `key=value` lines (`#` comments and blank lines ignored).
TrainConfig parse_config(std::string const &text, TrainConfig base = {});

/// Everything a training run mutates.
struct TrainState
{
  TrainConfig               config;
  std::uint64_t             iteration{0};
  LayerStack                generator;
  LayerStack                discriminator;
  AdamState                 adam_g;
  AdamState                 adam_d;
  SeededRng                 rng;
  std::optional<LayerStack> classifier;  ///< frozen feature network
};

/// Fresh networks and optimiser state drawn from `config.seed`. Throws
/// ContractError when lambda_per > 0 and no classifier is supplied.
TrainState init_training(TrainConfig const &config, std::optional<LayerStack> classifier);

Checkpoint to_checkpoint(TrainState const &state);
/// Rebuilds a state from a checkpoint. When `expected` is given the stored
/// fingerprint must match it.
TrainState from_checkpoint(Checkpoint const &ck, std::optional<TrainConfig> const &expected = std::nullopt);

struct LossRecord
{
  std::uint64_t iteration{0};
  LossReport    losses;
};

enum class UpdateTarget
{
  Discriminator,
  Generator,
};

struct UpdateEvent
{
  std::uint64_t iteration{0};
  UpdateTarget  target{UpdateTarget::Discriminator};
  /// Generator updates only: squared norms of the gradient contributed by
  /// each weighted loss term (pixel, adversarial, perceptual).
  std::optional<std::array<double, 3>> term_grad_norms;
};

struct TrainHooks
{
  std::function<void(UpdateEvent const &)> on_update;
  /// Computes the per-term gradient norms reported on generator events.
  bool                                      decompose_gradients{false};
  std::optional<std::filesystem::path>      checkpoint_path;
  std::uint64_t                             stop_at{0};  ///< 0 runs to max_iterations
};

/// Alternating updates from `state.iteration` to the configured end: per
/// outer iteration, d_iters discriminator updates then one generator update.
/// Returns one record per generator update.
std::vector<LossRecord> train_casi(TrainState &state, std::vector<Image> const &images,
                                   TrainHooks const &hooks = {});

/// `iteration,l_pix,l_adv,l_per,l_inp` with 17 significant digits.
std::string loss_csv(std::vector<LossRecord> const &records);

/// Mean-fills each image's hole, runs the generator in eval mode and
/// composites the result. Masks are [H,W]. Throws ContractError when a size
/// is not divisible by 8.
std::vector<Image> inpaint_batch(LayerStack &generator, std::vector<Image> const &images,
                                 std::vector<Tensor> const &masks);

struct PretrainConfig
{
  std::size_t   epochs{20};
  std::size_t   batch_size{16};
  std::size_t   base_channels{16};
  AdamHyper     adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed{0};
  bool          augment{true};  ///< random flips and channel permutations

  std::string canonical() const;
};

struct PretrainResult
{
  LayerStack          classifier;
  std::vector<double> epoch_loss;
  double              train_accuracy{0.0};
  double              test_accuracy{0.0};
};

/// Cross-entropy + Adam training of the feature classifier. Throws
/// ContractError for fewer than two classes.
PretrainResult pretrain_classifier(std::vector<Image> const &train, std::vector<std::size_t> const &train_labels,
                                   std::vector<Image> const &test, std::vector<std::size_t> const &test_labels,
                                   PretrainConfig const &cfg);

double accuracy(LayerStack &classifier, std::vector<Image> const &images,
                std::vector<std::size_t> const &labels);

/// Probability of `labels[i]` for each image, eval mode.
std::vector<double> label_probabilities(LayerStack &classifier, std::vector<Image> const &images,
                                        std::vector<std::size_t> const &labels);

Checkpoint classifier_checkpoint(LayerStack const &classifier, std::string const &config);
LayerStack classifier_from_checkpoint(Checkpoint const &ck);

}  // namespace casi
