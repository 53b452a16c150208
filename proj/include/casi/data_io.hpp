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

#include "casi/image.hpp"
#include "casi/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace casi {

struct ImageRecord
{
  Image                      image;
  std::filesystem::path      path;
  std::optional<std::size_t> label;
};

struct ManifestEntry
{
  std::string path;  ///< relative to the manifest's directory
  std::size_t label{0};

  bool operator==(ManifestEntry const &) const = default;
};

/// Ordered list of labelled images.
///
/// Text form, one entry per line: `relative/path<TAB>label_id`. Lines
/// starting with `#` are comments; `# split: NAME` and `# classes: a,b,c`
/// comments carry the split tag and category names.
struct Manifest
{
  std::vector<ManifestEntry> entries;
  std::string                split;
  std::vector<std::string>   categories;
  std::filesystem::path      root;  ///< directory the entry paths are relative to

  std::size_t size() const
  {
    return entries.size();
  }
  std::size_t num_classes() const;
  std::filesystem::path resolve(std::size_t i) const
  {
    return root / entries.at(i).path;
  }

  bool operator==(Manifest const &) const = default;
};

/// Parses manifest text. Errors carry the 1-based line number (Malformed),
/// the offending path (DuplicatePath) or the missing label (NonDenseLabels).
Manifest parse_manifest(std::string const &text, std::filesystem::path const &root);
Manifest load_manifest(std::filesystem::path const &path);
std::string format_manifest(Manifest const &manifest);
void        save_manifest(Manifest const &manifest, std::filesystem::path const &path);

ImageRecord        load_record(Manifest const &manifest, std::size_t i);
std::vector<Image> load_images(Manifest const &manifest);

enum class SynthClass
{
  Circle,
  Square,
  Stripes,
  Gradient,
};

std::string               to_string(SynthClass c);
std::vector<SynthClass>   default_synth_classes();

struct SynthConfig
{
  std::size_t             images_per_class{16};
  std::size_t             test_per_class{4};
  std::size_t             image_size{32};
  std::uint64_t           seed{0};
  std::vector<SynthClass> classes{default_synth_classes()};

  /// Throws ContractError unless the size is a positive multiple of 8 and
  /// there are at least two distinct classes.
  void validate() const;
};

/// Renders one image of class `c` with colours, position and phase drawn
/// from `rng`.
Image render_synthetic(SynthClass c, std::size_t size, SeededRng &rng);

struct SynthDataset
{
  Manifest train;
  Manifest test;
};

/// Writes `<root>/<split>/<class>/<index>.ppm` for the train and test splits
/// plus `<root>/train.txt` and `<root>/test.txt`. Labels are balanced and the
/// output depends only on the config.
SynthDataset synth_dataset(SynthConfig const &cfg, std::filesystem::path const &root);

/// Replaces missing pixels (mask 1) with the per-channel mean of the context
/// pixels. Accepts [C,H,W] or [N,C,H,W] with an [H,W] mask; each image uses
/// its own context mean. Throws ContractError when the mask has no context.
Tensor mean_fill(Tensor const &x, Tensor const &mask);
Image  mean_fill(Image const &x, Tensor const &mask);

struct NearestNeighbour
{
  Image       composite;
  std::size_t index{0};
  double      distance{0.0};  ///< squared L2 over context pixels
};

/// Exemplar baseline: finds the training image closest to `query` over the
/// context pixels (lowest index wins ties) and pastes its missing region into
/// the query. Throws DimensionError on size mismatch.
NearestNeighbour nn_inpaint(Image const &query, Tensor const &mask,
                            std::vector<Image> const &training);

}  // namespace casi
