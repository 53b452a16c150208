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

#include "casi/data_io.hpp"

#include "casi/mask.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace casi {

std::size_t Manifest::num_classes() const
{
  std::size_t k = categories.size();
  for (auto const &e : entries)
  {
    k = std::max(k, e.label + 1);
  }
  return k;
}

namespace {

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
  {
    return {};
  }
  auto const e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(std::string const &s)
{
  std::vector<std::string> out;
  std::stringstream        ss(s);
  std::string              item;
  while (std::getline(ss, item, ','))
  {
    item = trim(item);
    if (!item.empty())
    {
      out.push_back(item);
    }
  }
  return out;
}

[[noreturn]] void malformed(std::size_t line, std::string const &why)
{
  throw FormatError(FormatError::Kind::Malformed,
                    "manifest line " + std::to_string(line) + ": " + why);
}

}  // namespace

Manifest parse_manifest(std::string const &text, std::filesystem::path const &root)
{
  Manifest m;
  m.root = root;
  std::set<std::string> seen;
  std::istringstream    in(text);
  std::string           raw;
  std::size_t           line_no = 0;
  while (std::getline(in, raw))
  {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r')
    {
      raw.pop_back();
    }
    std::string const line = trim(raw);
    if (line.empty())
    {
      continue;
    }
    if (line.front() == '#')
    {
      std::string const body = trim(line.substr(1));
      if (body.rfind("split:", 0) == 0)
      {
        m.split = trim(body.substr(6));
      }
      else if (body.rfind("classes:", 0) == 0)
      {
        m.categories = split_csv(body.substr(8));
      }
      continue;
    }
    auto const tab = raw.find('\t');
    if (tab == std::string::npos)
    {
      malformed(line_no, "expected <path><TAB><label>");
    }
    std::string const path  = trim(raw.substr(0, tab));
    std::string const label = trim(raw.substr(tab + 1));
    if (path.empty())
    {
      malformed(line_no, "empty path");
    }
    if (label.empty() || !std::all_of(label.begin(), label.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        label.size() > 9)
    {
      malformed(line_no, "label must be a non-negative integer, got '" + label + "'");
    }
    if (!seen.insert(path).second)
    {
      throw FormatError(FormatError::Kind::DuplicatePath,
                        "manifest line " + std::to_string(line_no) + ": duplicate path " + path);
    }
    m.entries.push_back({path, static_cast<std::size_t>(std::stoul(label))});
  }

  std::set<std::size_t> labels;
  for (auto const &e : m.entries)
  {
    labels.insert(e.label);
  }
  std::size_t expect = 0;
  for (auto l : labels)
  {
    if (l != expect)
    {
      throw FormatError(FormatError::Kind::NonDenseLabels,
                        "non-dense labels: label " + std::to_string(expect) + " is missing");
    }
    ++expect;
  }
  if (!m.categories.empty() && m.categories.size() < labels.size())
  {
    throw FormatError(FormatError::Kind::Malformed, "manifest lists fewer class names than labels");
  }
  return m;
}

Manifest load_manifest(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open manifest " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string format_manifest(Manifest const &manifest)
{
  std::ostringstream out;
  if (!manifest.split.empty())
  {
    out << "# split: " << manifest.split << "\n";
  }
  if (!manifest.categories.empty())
  {
    out << "# classes: ";
    for (std::size_t i = 0; i < manifest.categories.size(); ++i)
    {
      out << (i ? "," : "") << manifest.categories[i];
    }
    out << "\n";
  }
  for (auto const &e : manifest.entries)
  {
    out << e.path << '\t' << e.label << '\n';
  }
  return out.str();
}

void save_manifest(Manifest const &manifest, std::filesystem::path const &path)
{
  std::string const text = format_manifest(manifest);
  write_file_atomic(path, std::span(reinterpret_cast<std::uint8_t const *>(text.data()), text.size()));
}

ImageRecord load_record(Manifest const &manifest, std::size_t i)
{
  ImageRecord r;
  r.path  = manifest.resolve(i);
  r.image = read_image(r.path);
  r.label = manifest.entries[i].label;
  return r;
}

std::vector<Image> load_images(Manifest const &manifest)
{
  std::vector<Image> out;
  out.reserve(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i)
  {
    out.push_back(read_image(manifest.resolve(i)));
  }
  return out;
}

std::string to_string(SynthClass c)
{
  switch (c)
  {
  case SynthClass::Circle:
    return "circle";
  case SynthClass::Square:
    return "square";
  case SynthClass::Stripes:
    return "stripes";
  case SynthClass::Gradient:
    return "gradient";
  }
  return "unknown";
}

std::vector<SynthClass> default_synth_classes()
{
  return {SynthClass::Circle, SynthClass::Square, SynthClass::Stripes, SynthClass::Gradient};
}

void SynthConfig::validate() const
{
  if (image_size == 0 || image_size % 8 != 0)
  {
    throw ContractError("synthetic image size must be a positive multiple of 8");
  }
  std::set<SynthClass> distinct(classes.begin(), classes.end());
  if (distinct.size() < 2 || distinct.size() != classes.size())
  {
    throw ContractError("synthetic dataset needs at least two distinct classes");
  }
  if (images_per_class == 0)
  {
    throw ContractError("images_per_class must be positive");
  }
}

namespace {

using Colour = std::array<double, 3>;

Colour random_colour(SeededRng &rng)
{
  return {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
}

double luminance(Colour const &c)
{
  return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
}

// the foreground is always the brighter colour, by at least 0.3 in luma
std::pair<Colour, Colour> contrasting_pair(SeededRng &rng)
{
  for (;;)
  {
    Colour const a = random_colour(rng);
    Colour const b = random_colour(rng);
    if (luminance(a) >= luminance(b) + 0.3)
    {
      return {a, b};
    }
  }
}

constexpr double kNoise = 0.03;

}  // namespace

Image render_synthetic(SynthClass cls, std::size_t size, SeededRng &rng)
{
  double const s = static_cast<double>(size);
  auto const [fg, bg] = contrasting_pair(rng);
  double const cy = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
  double const cx = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
  double const extent = rng.uniform(0.3 * s, 0.4 * s);
  double const period = rng.uniform(4.0, 8.0);
  double const phase  = rng.uniform(0.0, period);

  Image img(3, size, size);
  for (std::size_t y = 0; y < size; ++y)
  {
    for (std::size_t x = 0; x < size; ++x)
    {
      double const py = static_cast<double>(y) + 0.5;
      double const px = static_cast<double>(x) + 0.5;
      double       t  = 0.0;  // 0 -> background, 1 -> foreground
      switch (cls)
      {
      case SynthClass::Circle:
        t = std::hypot(py - cy, px - cx) <= extent ? 1.0 : 0.0;
        break;
      case SynthClass::Square:
        t = std::max(std::abs(py - cy), std::abs(px - cx)) <= extent ? 1.0 : 0.0;
        break;
      case SynthClass::Stripes:
        t = std::fmod(py + phase, period) < period / 2.0 ? 1.0 : 0.0;
        break;
      case SynthClass::Gradient:
        t = std::max(0.0, 1.0 - std::hypot(py - cy, px - cx) / (0.75 * s));
        break;
      }
      for (std::size_t c = 0; c < 3; ++c)
      {
        double const v  = t * fg[c] + (1.0 - t) * bg[c];
        img.at(c, y, x) = std::clamp(v + rng.uniform(-kNoise, kNoise), 0.0, 1.0);
      }
    }
  }
  return img;
}

SynthDataset synth_dataset(SynthConfig const &cfg, std::filesystem::path const &root)
{
  cfg.validate();
  SeededRng    rng(cfg.seed);
  SynthDataset out;
  std::vector<std::string> names;
  for (auto c : cfg.classes)
  {
    names.push_back(to_string(c));
  }
  auto emit = [&](Manifest &m, std::string const &split, std::size_t per_class) {
    m.split      = split;
    m.categories = names;
    m.root       = root;
    // interleave classes so any prefix of the manifest stays balanced
    for (std::size_t i = 0; i < per_class; ++i)
    {
      for (std::size_t k = 0; k < cfg.classes.size(); ++k)
      {
        Image const       img = render_synthetic(cfg.classes[k], cfg.image_size, rng);
        std::string const rel = split + "/" + names[k] + "/" + std::to_string(i) + ".ppm";
        write_image(img, root / rel);
        m.entries.push_back({rel, k});
      }
    }
    save_manifest(m, root / (split + ".txt"));
  };
  emit(out.train, "train", cfg.images_per_class);
  emit(out.test, "test", cfg.test_per_class);
  return out;
}

Tensor mean_fill(Tensor const &x, Tensor const &mask)
{
  if (mask.ndim() != 2)
  {
    throw DimensionError("mean_fill: mask must be [H,W]", "rank");
  }
  if (x.ndim() != 3 && x.ndim() != 4)
  {
    throw DimensionError("mean_fill: image must be [C,H,W] or [N,C,H,W]", "rank");
  }
  std::size_t const h = x.dim(x.ndim() - 2);
  std::size_t const w = x.dim(x.ndim() - 1);
  if (h != mask.dim(0) || w != mask.dim(1))
  {
    throw DimensionError("mean_fill: mask does not match image", h != mask.dim(0) ? "H" : "W");
  }
  std::size_t const plane   = h * w;
  std::size_t       context = 0;
  for (std::size_t i = 0; i < plane; ++i)
  {
    context += mask[i] == 0.0 ? 1 : 0;
  }
  if (context == 0)
  {
    throw ContractError("mean_fill: mask leaves no context pixels");
  }
  Tensor out = x;
  for (std::size_t p = 0; p < x.size() / plane; ++p)
  {
    auto   data = out.data().subspan(p * plane, plane);
    double sum  = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
    {
      if (mask[i] == 0.0)
      {
        sum += data[i];
      }
    }
    double const fill = sum / static_cast<double>(context);
    for (std::size_t i = 0; i < plane; ++i)
    {
      if (mask[i] != 0.0)
      {
        data[i] = fill;
      }
    }
  }
  return out;
}

Image mean_fill(Image const &x, Tensor const &mask)
{
  return Image::from_tensor(mean_fill(x.to_tensor(), mask));
}

NearestNeighbour nn_inpaint(Image const &query, Tensor const &mask, std::vector<Image> const &training)
{
  if (training.empty())
  {
    throw ContractError("nn_inpaint: empty training set");
  }
  if (mask.ndim() != 2 || mask.dim(0) != query.height || mask.dim(1) != query.width)
  {
    throw DimensionError("nn_inpaint: mask does not match query", "H");
  }
  std::size_t const plane = query.height * query.width;
  NearestNeighbour  best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < training.size(); ++t)
  {
    Image const &cand = training[t];
    if (cand.channels != query.channels || cand.height != query.height || cand.width != query.width)
    {
      throw DimensionError("nn_inpaint: training image " + std::to_string(t) + " differs in size",
                           cand.height != query.height ? "H" : (cand.width != query.width ? "W" : "C"));
    }
    double d = 0.0;
    for (std::size_t j = 0; j < query.data.size(); ++j)
    {
      if (mask[j % plane] == 0.0)
      {
        double const diff = query.data[j] - cand.data[j];
        d += diff * diff;
      }
    }
    if (d < best.distance)
    {
      best.distance = d;
      best.index    = t;
    }
  }
  best.composite = Image::from_tensor(compose(query.to_tensor(), training[best.index].to_tensor(), mask));
  return best;
}

}  // namespace casi
