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
#include "casi/image.hpp"
#include "casi/mask.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include <unistd.h>

using namespace casi;
namespace fs = std::filesystem;

namespace {

class TempDir
{
public:
  TempDir()
  {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("casi_data_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path const &path() const
  {
    return path_;
  }

private:
  fs::path path_;
};

Image random_image(SeededRng &rng, std::size_t h, std::size_t w)
{
  Image img(3, h, w);
  for (auto &v : img.data)
  {
    v = static_cast<double>(rng.below(256)) / 255.0;
  }
  return img;
}

std::vector<std::uint8_t> bytes_of(std::string const &s)
{
  return {s.begin(), s.end()};
}

FormatError::Kind decode_error(std::string const &s)
{
  try
  {
    auto const b = bytes_of(s);
    decode_pnm(b);
  }
  catch (FormatError const &e)
  {
    return e.kind();
  }
  ADD_FAILURE() << "no FormatError";
  return FormatError::Kind::Malformed;
}

}  // namespace

TEST(Codec, HandCraftedPpmDecodes)
{
  std::string s = "P6\n2 2\n255\n";
  s += std::string("\xff\x00\x00" "\x00\xff\x00" "\x00\x00\xff" "\x80\x80\x80", 12);
  auto const  b   = bytes_of(s);
  Image const img = decode_pnm(b);
  ASSERT_EQ(img.channels, 3u);
  ASSERT_EQ(img.height, 2u);
  ASSERT_EQ(img.width, 2u);
  EXPECT_EQ(img.at(0, 0, 0), 1.0);
  EXPECT_EQ(img.at(1, 0, 0), 0.0);
  EXPECT_EQ(img.at(1, 0, 1), 1.0);
  EXPECT_EQ(img.at(2, 1, 0), 1.0);
  EXPECT_EQ(img.at(0, 1, 1), 128.0 / 255.0);
  EXPECT_EQ(encode_ppm(img), b);
}

TEST(Codec, HeaderCommentsAreSkipped)
{
  std::string s = "P5\n# made by hand\n2 1\n255\n";
  s += std::string("\x00\xff", 2);
  Image const img = decode_pnm(bytes_of(s));
  EXPECT_EQ(img.channels, 1u);
  EXPECT_EQ(img.data, (std::vector<double>{0.0, 1.0}));
}

TEST(Codec, DistinctErrors)
{
  EXPECT_EQ(decode_error("P3\n1 1\n255\n\x01\x02\x03"), FormatError::Kind::BadMagic);
  EXPECT_EQ(decode_error("P6\n1 1\n65535\n\x01\x02\x03"), FormatError::Kind::BadMaxval);
  EXPECT_EQ(decode_error("P6\n2 2\n255\n\x01\x02\x03"), FormatError::Kind::Truncated);
  EXPECT_EQ(decode_error("P6\nx 2\n255\n"), FormatError::Kind::Malformed);
}

TEST(Codec, RoundTripOnTheEightBitLattice)
{
  TempDir     dir;
  SeededRng   rng(1);
  Image const img = random_image(rng, 8, 16);
  write_image(img, dir.path() / "a.ppm");
  EXPECT_EQ(read_image(dir.path() / "a.ppm"), img);

  Image grey(1, 4, 4);
  grey.data.assign(16, 0.2);
  write_image(grey, dir.path() / "g.pgm");
  Image const back = read_image(dir.path() / "g.pgm");
  EXPECT_EQ(back.channels, 1u);
  EXPECT_EQ(back.data[0], quantize(0.2) / 255.0);
}

TEST(Codec, QuantizeRoundsAndClamps)
{
  EXPECT_EQ(quantize(-0.5), 0);
  EXPECT_EQ(quantize(2.0), 255);
  EXPECT_EQ(quantize(0.5), 128);
  EXPECT_EQ(quantize(1.0 / 255.0), 1);
}

TEST(Codec, MaskBinarisedAtThreshold)
{
  TempDir     dir;
  std::string s = "P5\n4 1\n255\n";
  s += std::string("\x00\x7f\x80\xff", 4);
  {
    std::ofstream out(dir.path() / "m.pgm", std::ios::binary);
    out << s;
  }
  Tensor const m = read_mask(dir.path() / "m.pgm");
  EXPECT_EQ(m.shape(), (Shape{1, 4}));
  EXPECT_EQ(m.values(), (std::vector<double>{0, 0, 1, 1}));

  Tensor const centre = make_center_mask(8, 8, 0).mask;
  write_mask(centre, dir.path() / "c.pgm");
  EXPECT_EQ(read_mask(dir.path() / "c.pgm"), centre);
}

TEST(Manifest, ParsesInOrderWithHeaders)
{
  Manifest const m = parse_manifest("# split: train\n# classes: circle,square\n"
                                    "b.ppm\t1\n# note\n\na.ppm\t0\n",
                                    "/data");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.entries[0], (ManifestEntry{"b.ppm", 1}));
  EXPECT_EQ(m.entries[1], (ManifestEntry{"a.ppm", 0}));
  EXPECT_EQ(m.split, "train");
  EXPECT_EQ(m.categories, (std::vector<std::string>{"circle", "square"}));
  EXPECT_EQ(m.num_classes(), 2u);
  EXPECT_EQ(m.resolve(1), fs::path("/data") / "a.ppm");
  EXPECT_EQ(parse_manifest(format_manifest(m), "/data"), m);
}

TEST(Manifest, DuplicatePathNamesThePath)
{
  try
  {
    parse_manifest("x/a.ppm\t0\nx/a.ppm\t1\n", ".");
    FAIL() << "expected FormatError";
  }
  catch (FormatError const &e)
  {
    EXPECT_EQ(e.kind(), FormatError::Kind::DuplicatePath);
    EXPECT_NE(std::string(e.what()).find("x/a.ppm"), std::string::npos);
  }
}

TEST(Manifest, NonDenseLabels)
{
  try
  {
    parse_manifest("a.ppm\t0\nb.ppm\t2\n", ".");
    FAIL() << "expected FormatError";
  }
  catch (FormatError const &e)
  {
    EXPECT_EQ(e.kind(), FormatError::Kind::NonDenseLabels);
    EXPECT_NE(std::string(e.what()).find("non-dense"), std::string::npos);
  }
}

TEST(Manifest, MalformedLineReportsLineNumber)
{
  try
  {
    parse_manifest("a.ppm\t0\n# c\nb.ppm 1\n", ".");
    FAIL() << "expected FormatError";
  }
  catch (FormatError const &e)
  {
    EXPECT_EQ(e.kind(), FormatError::Kind::Malformed);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest("a.ppm\tx\n", "."), FormatError);
}

TEST(MeanFill, EmptyMaskIsIdentity)
{
  SeededRng   rng(2);
  Image const x = random_image(rng, 4, 4);
  // all-context mask: nothing is missing
  EXPECT_EQ(mean_fill(x, Tensor(Shape{4, 4}, 0.0)), x);
}

TEST(MeanFill, ConstantContext)
{
  Image        x(3, 4, 4, 0.5);
  Tensor const m = make_center_mask(4, 4, 0).mask;
  for (std::size_t c = 0; c < 3; ++c)
  {
    x.at(c, 1, 1) = 0.9;
  }
  Image const out = mean_fill(x, m);
  for (std::size_t c = 0; c < 3; ++c)
  {
    EXPECT_EQ(out.at(c, 1, 1), 0.5);
    EXPECT_EQ(out.at(c, 2, 2), 0.5);
  }
}

TEST(MeanFill, TwoContextPixels)
{
  Image x(1, 1, 4, 0.0);
  x.data = {0.2, 0.9, 0.9, 0.4};
  Tensor m(Shape{1, 4}, std::vector<double>{0, 1, 1, 0});
  Image const out = mean_fill(x, m);
  EXPECT_NEAR(out.data[1], 0.3, 1e-15);
  EXPECT_EQ(out.data[0], 0.2);
  EXPECT_EQ(out.data[3], 0.4);
  EXPECT_THROW(mean_fill(x, Tensor(Shape{1, 4}, 1.0)), ContractError);
}

TEST(MeanFill, Idempotent)
{
  SeededRng    rng(3);
  Tensor const x = Tensor::uniform(Shape{2, 3, 8, 8}, rng, 0.0, 1.0);
  Tensor const m = make_center_mask(8, 8, 0).mask;
  Tensor const once = mean_fill(x, m);
  EXPECT_EQ(mean_fill(once, m), once);
}

TEST(NearestNeighbour, SelfMatch)
{
  SeededRng          rng(4);
  std::vector<Image> train{random_image(rng, 8, 8), random_image(rng, 8, 8), random_image(rng, 8, 8)};
  Tensor const       m = make_center_mask(8, 8, 0).mask;
  auto const         r = nn_inpaint(train[1], m, train);
  EXPECT_EQ(r.index, 1u);
  EXPECT_EQ(r.distance, 0.0);
  EXPECT_EQ(r.composite, train[1]);
}

TEST(NearestNeighbour, PicksCloserImageAndKeepsContext)
{
  Tensor const m = make_center_mask(4, 4, 0).mask;
  Image        query(3, 4, 4, 0.5);
  Image        near(3, 4, 4, 0.6);
  Image        far(3, 4, 4, 0.9);
  for (std::size_t c = 0; c < 3; ++c)
  {
    near.at(c, 1, 1) = 0.1;
  }
  auto const r = nn_inpaint(query, m, {far, near});
  EXPECT_EQ(r.index, 1u);
  // 12 context pixels x 3 channels x 0.1^2
  EXPECT_NEAR(r.distance, 36 * 0.01, 1e-12);
  EXPECT_EQ(r.composite.at(0, 1, 1), 0.1);
  EXPECT_EQ(r.composite.at(0, 2, 2), 0.6);
  EXPECT_EQ(r.composite.at(0, 0, 0), 0.5);
}

TEST(NearestNeighbour, TieGoesToLowerIndex)
{
  Tensor const m = make_center_mask(4, 4, 0).mask;
  Image const  query(3, 4, 4, 0.5);
  Image        a(3, 4, 4, 0.4);
  Image        b(3, 4, 4, 0.6);
  EXPECT_EQ(nn_inpaint(query, m, {a, b}).index, 0u);
  EXPECT_EQ(nn_inpaint(query, m, {b, a}).index, 0u);
  EXPECT_THROW(nn_inpaint(query, m, {Image(3, 8, 8)}), DimensionError);
}

TEST(SynthDataset, DeterministicAndBalanced)
{
  TempDir     a, b;
  SynthConfig cfg;
  cfg.seed             = 9;
  cfg.images_per_class = 3;
  cfg.test_per_class   = 2;
  auto const da        = synth_dataset(cfg, a.path());
  auto const db        = synth_dataset(cfg, b.path());
  ASSERT_EQ(da.train.size(), 12u);
  ASSERT_EQ(da.test.size(), 8u);
  std::map<std::size_t, int> hist;
  for (std::size_t i = 0; i < da.train.size(); ++i)
  {
    EXPECT_EQ(read_file(da.train.resolve(i)), read_file(db.train.resolve(i)));
    ++hist[da.train.entries[i].label];
  }
  EXPECT_EQ(hist, (std::map<std::size_t, int>{{0, 3}, {1, 3}, {2, 3}, {3, 3}}));
  EXPECT_EQ(load_manifest(a.path() / "train.txt").entries, da.train.entries);
  EXPECT_EQ(da.train.categories,
            (std::vector<std::string>{"circle", "square", "stripes", "gradient"}));
}

TEST(SynthDataset, ImagesAreValidGeneratorInputs)
{
  for (std::size_t size : {8u, 16u, 32u, 48u})
  {
    SeededRng rng(size);
    for (auto c : default_synth_classes())
    {
      Image const img = render_synthetic(c, size, rng);
      EXPECT_EQ(img.height % 8, 0u);
      EXPECT_EQ(img.width, size);
      for (double v : img.data)
      {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
  SynthConfig bad;
  bad.image_size = 20;
  EXPECT_THROW(bad.validate(), ContractError);
  bad.image_size = 32;
  bad.classes    = {SynthClass::Circle};
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(SynthDataset, ClassesLookDifferent)
{
  // horizontal stripes: a row is one colour up to the noise
  SeededRng   rng(5);
  Image const s = render_synthetic(SynthClass::Stripes, 32, rng);
  double      row_spread = 0.0;
  for (std::size_t x = 1; x < 32; ++x)
  {
    row_spread = std::max(row_spread, std::abs(s.at(0, 10, x) - s.at(0, 10, 0)));
  }
  EXPECT_LT(row_spread, 0.07);
}
