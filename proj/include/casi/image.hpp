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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace casi {

/// Planar (channel-major) image with values in [0, 1].
struct Image
{
  std::size_t         channels{3};
  std::size_t         height{0};
  std::size_t         width{0};
  std::vector<double> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
    : channels(c)
    , height(h)
    , width(w)
    , data(c * h * w, fill)
  {}

  double &at(std::size_t c, std::size_t y, std::size_t x)
  {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const
  {
    return data[(c * height + y) * width + x];
  }

  /// [C,H,W] tensor copy.
  Tensor to_tensor() const;
  /// Accepts [C,H,W] or [1,C,H,W].
  static Image from_tensor(Tensor const &t);

  bool operator==(Image const &) const = default;
};

/// Stacks same-sized images into an [N,C,H,W] batch.
Tensor stack(std::vector<Image> const &images);
/// Splits an [N,C,H,W] batch into images.
std::vector<Image> unstack(Tensor const &batch);

/// 8-bit quantisation used by the codecs: round(v * 255) after clamping to
/// [0, 1].
std::uint8_t quantize(double v);

// Binary netpbm codecs. PPM (P6) carries RGB, PGM (P5) grey levels and masks;
// maxval must be 255. Errors are FormatError with kind BadMagic, BadMaxval,
// Truncated or Malformed.

std::vector<std::uint8_t> encode_ppm(Image const &image);
std::vector<std::uint8_t> encode_pgm(Image const &image);
/// Decodes either P6 or P5; the result has 3 or 1 channels accordingly.
Image decode_pnm(std::span<std::uint8_t const> bytes);

Image read_image(std::filesystem::path const &path);
/// Writes P6 for 3-channel images and P5 for 1-channel images.
void write_image(Image const &image, std::filesystem::path const &path);

/// Reads a P5 mask and binarises it: values >= 128 become 1 (missing).
/// Returns an [H,W] tensor.
Tensor read_mask(std::filesystem::path const &path);
void   write_mask(Tensor const &mask, std::filesystem::path const &path);

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(std::filesystem::path const &path, std::span<std::uint8_t const> bytes);
std::vector<std::uint8_t> read_file(std::filesystem::path const &path);

}  // namespace casi
