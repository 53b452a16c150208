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

#include "casi/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace casi {

Tensor Image::to_tensor() const
{
  return Tensor(Shape{channels, height, width}, data);
}

Image Image::from_tensor(Tensor const &t)
{
  Shape s = t.shape();
  if (s.size() == 4 && s[0] == 1)
  {
    s.erase(s.begin());
  }
  if (s.size() != 3)
  {
    throw DimensionError("image tensor must be [C,H,W], got " + shape_to_string(t.shape()),
                         "rank");
  }
  Image img(s[0], s[1], s[2]);
  img.data = t.values();
  return img;
}

Tensor stack(std::vector<Image> const &images)
{
  if (images.empty())
  {
    throw ContractError("cannot stack an empty image list");
  }
  auto const         &f = images.front();
  std::vector<double> data;
  data.reserve(images.size() * f.data.size());
  for (auto const &img : images)
  {
    if (img.channels != f.channels || img.height != f.height || img.width != f.width)
    {
      throw DimensionError("stack: images differ in size", "H");
    }
    data.insert(data.end(), img.data.begin(), img.data.end());
  }
  return Tensor(Shape{images.size(), f.channels, f.height, f.width}, std::move(data));
}

std::vector<Image> unstack(Tensor const &batch)
{
  if (batch.ndim() != 4)
  {
    throw DimensionError("unstack expects [N,C,H,W]", "rank");
  }
  std::size_t const  per = batch.size() / batch.dim(0);
  std::vector<Image> out;
  for (std::size_t n = 0; n < batch.dim(0); ++n)
  {
    Image img(batch.dim(1), batch.dim(2), batch.dim(3));
    std::copy_n(batch.data().begin() + static_cast<std::ptrdiff_t>(n * per), per, img.data.begin());
    out.push_back(std::move(img));
  }
  return out;
}

std::uint8_t quantize(double v)
{
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

namespace {

std::vector<std::uint8_t> encode(Image const &image, char kind)
{
  std::size_t const channels = kind == '6' ? 3 : 1;
  if (image.channels != channels)
  {
    throw ContractError(std::string("P") + kind + " needs " + std::to_string(channels) +
                        " channel(s), image has " + std::to_string(image.channels));
  }
  std::string const header = std::string("P") + kind + "\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.data.size());
  for (std::size_t y = 0; y < image.height; ++y)
  {
    for (std::size_t x = 0; x < image.width; ++x)
    {
      for (std::size_t c = 0; c < channels; ++c)
      {
        out.push_back(quantize(image.at(c, y, x)));
      }
    }
  }
  return out;
}

class HeaderReader
{
public:
  explicit HeaderReader(std::span<std::uint8_t const> bytes)
    : bytes_(bytes)
  {}

  std::size_t number(char const *field)
  {
    skip_space_and_comments();
    if (pos_ >= bytes_.size())
    {
      throw FormatError(FormatError::Kind::Truncated, std::string("netpbm header ends before ") + field);
    }
    if (!std::isdigit(bytes_[pos_]))
    {
      throw FormatError(FormatError::Kind::Malformed, std::string("netpbm header: bad ") + field);
    }
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]))
    {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 24))
      {
        throw FormatError(FormatError::Kind::Malformed, std::string("netpbm header: ") + field + " too large");
      }
    }
    return v;
  }

  // exactly one whitespace byte separates maxval from the raster
  std::size_t raster_start()
  {
    if (pos_ >= bytes_.size())
    {
      throw FormatError(FormatError::Kind::Truncated, "netpbm header ends before raster");
    }
    if (!std::isspace(bytes_[pos_]))
    {
      throw FormatError(FormatError::Kind::Malformed, "netpbm header: missing separator");
    }
    return pos_ + 1;
  }

  void skip(std::size_t n)
  {
    pos_ += n;
  }

private:
  void skip_space_and_comments()
  {
    while (pos_ < bytes_.size())
    {
      if (std::isspace(bytes_[pos_]))
      {
        ++pos_;
      }
      else if (bytes_[pos_] == '#')
      {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
        {
          ++pos_;
        }
      }
      else
      {
        break;
      }
    }
  }

  std::span<std::uint8_t const> bytes_;
  std::size_t                   pos_{0};
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(Image const &image)
{
  return encode(image, '6');
}

std::vector<std::uint8_t> encode_pgm(Image const &image)
{
  return encode(image, '5');
}

Image decode_pnm(std::span<std::uint8_t const> bytes)
{
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5'))
  {
    throw FormatError(FormatError::Kind::BadMagic, "not a binary PPM/PGM file (expected P6 or P5)");
  }
  std::size_t const channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader      header(bytes);
  header.skip(2);
  std::size_t const width  = header.number("width");
  std::size_t const height = header.number("height");
  std::size_t const maxval = header.number("maxval");
  if (maxval != 255)
  {
    throw FormatError(FormatError::Kind::BadMaxval, "unsupported maxval " + std::to_string(maxval) +
                                                        " (only 255 is accepted)");
  }
  if (width == 0 || height == 0)
  {
    throw FormatError(FormatError::Kind::Malformed, "netpbm image has zero size");
  }
  std::size_t const start = header.raster_start();
  std::size_t const need  = width * height * channels;
  if (bytes.size() < start + need)
  {
    throw FormatError(FormatError::Kind::Truncated,
                      "netpbm payload truncated: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - std::min(bytes.size(), start)));
  }
  Image img(channels, height, width);
  for (std::size_t y = 0; y < height; ++y)
  {
    for (std::size_t x = 0; x < width; ++x)
    {
      for (std::size_t c = 0; c < channels; ++c)
      {
        img.at(c, y, x) = bytes[start + (y * width + x) * channels + c] / 255.0;
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> read_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(std::filesystem::path const &path, std::span<std::uint8_t const> bytes)
{
  if (path.has_parent_path())
  {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw Error("cannot write " + tmp.string());
    }
    out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
    {
      throw Error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Image read_image(std::filesystem::path const &path)
{
  auto const bytes = read_file(path);
  return decode_pnm(bytes);
}

void write_image(Image const &image, std::filesystem::path const &path)
{
  auto const bytes = image.channels == 1 ? encode_pgm(image) : encode_ppm(image);
  write_file_atomic(path, bytes);
}

Tensor read_mask(std::filesystem::path const &path)
{
  Image const img = read_image(path);
  if (img.channels != 1)
  {
    throw FormatError(FormatError::Kind::BadMagic, "mask must be a P5 (PGM) file: " + path.string());
  }
  Tensor mask(Shape{img.height, img.width});
  for (std::size_t i = 0; i < img.data.size(); ++i)
  {
    mask[i] = quantize(img.data[i]) >= 128 ? 1.0 : 0.0;
  }
  return mask;
}

void write_mask(Tensor const &mask, std::filesystem::path const &path)
{
  if (mask.ndim() != 2)
  {
    throw DimensionError("mask must be [H,W]", "rank");
  }
  Image img(1, mask.dim(0), mask.dim(1));
  for (std::size_t i = 0; i < mask.size(); ++i)
  {
    img.data[i] = mask[i] != 0.0 ? 1.0 : 0.0;
  }
  write_image(img, path);
}

}  // namespace casi
