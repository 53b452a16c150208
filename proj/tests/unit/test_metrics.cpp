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

#include "casi/fft.hpp"
#include "casi/image.hpp"
#include "casi/metrics.hpp"
#include "casi/rng.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace casi;

namespace {

std::filesystem::path fixture(std::string const &name)
{
  return std::filesystem::path(CASI_FIXTURE_DIR) / name;
}

Image random_image(SeededRng &rng, std::size_t h, std::size_t w, std::size_t c = 3)
{
  Image img(c, h, w);
  for (auto &v : img.data)
  {
    v = rng.uniform();
  }
  return img;
}

Image box_blur(Image const &img, long radius)
{
  Image out(img.channels, img.height, img.width);
  long const h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  for (std::size_t c = 0; c < img.channels; ++c)
  {
    for (long y = 0; y < h; ++y)
    {
      for (long x = 0; x < w; ++x)
      {
        double s = 0.0;
        for (long dy = -radius; dy <= radius; ++dy)
        {
          for (long dx = -radius; dx <= radius; ++dx)
          {
            long const yy = std::clamp(y + dy, 0L, h - 1);
            long const xx = std::clamp(x + dx, 0L, w - 1);
            s += img.at(c, yy, xx);
          }
        }
        out.at(c, y, x) = s / static_cast<double>((2 * radius + 1) * (2 * radius + 1));
      }
    }
  }
  return out;
}

// independent per-pixel histogram over a 9x9 mirrored window
GrayImage brute_force_entropy(GrayImage const &g)
{
  auto mirror = [](long i, long n) {
    while (i < 0 || i >= n)
    {
      i = i < 0 ? -i : 2 * (n - 1) - i;
    }
    return i;
  };
  GrayImage out(g.height, g.width);
  long const h = static_cast<long>(g.height), w = static_cast<long>(g.width);
  for (long y = 0; y < h; ++y)
  {
    for (long x = 0; x < w; ++x)
    {
      std::array<int, 256> hist{};
      for (long dy = -4; dy <= 4; ++dy)
      {
        for (long dx = -4; dx <= 4; ++dx)
        {
          double const v = g.at(mirror(y + dy, h), mirror(x + dx, w));
          ++hist[static_cast<std::size_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))];
        }
      }
      double e = 0.0;
      for (int count : hist)
      {
        if (count > 0)
        {
          double const p = count / 81.0;
          e -= p * std::log2(p);
        }
      }
      out.at(y, x) = e;
    }
  }
  return out;
}

Tensor full_mask(std::size_t h, std::size_t w)
{
  return Tensor(Shape{h, w}, 1.0);
}

}  // namespace

TEST(PixelErrors, IdenticalImagesHitPsnrCap)
{
  SeededRng   rng(1);
  Image const x = random_image(rng, 8, 8);
  auto const  e = pixel_error_report(x, x, full_mask(8, 8));
  EXPECT_EQ(e.l1_percent, 0.0);
  EXPECT_EQ(e.l2_percent, 0.0);
  EXPECT_EQ(e.psnr_db, kPsnrCap);
}

TEST(PixelErrors, ConstantDifference)
{
  Image const x(3, 4, 4, 0.3);
  Image const z(3, 4, 4, 0.4);
  auto const  e = pixel_error_report(x, z, full_mask(4, 4));
  EXPECT_NEAR(e.l1_percent, 10.0, 1e-12);
  EXPECT_NEAR(e.l2_percent, 1.0, 1e-12);
  EXPECT_NEAR(e.psnr_db, 20.0, 1e-10);
}

TEST(PixelErrors, HalfTheMaskedPixelsDifferByOne)
{
  Image const x(3, 4, 4, 0.0);
  Image       z = x;
  Tensor      mask(Shape{4, 4}, 0.0);
  for (std::size_t y = 0; y < 2; ++y)
  {
    for (std::size_t xx = 0; xx < 4; ++xx)
    {
      mask[y * 4 + xx] = 1.0;
      if (xx < 2)
      {
        for (std::size_t c = 0; c < 3; ++c)
        {
          z.at(c, y, xx) = 1.0;
        }
      }
    }
  }
  // context pixels are ignored
  z.at(0, 3, 3) = 1.0;
  auto const e  = pixel_error_report(x, z, mask);
  EXPECT_NEAR(e.l1_percent, 50.0, 1e-12);
  EXPECT_NEAR(e.l2_percent, 50.0, 1e-12);
  EXPECT_NEAR(e.psnr_db, 10.0 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(e.psnr_db, 3.0103, 1e-4);
}

TEST(PixelErrors, EmptyMaskThrows)
{
  Image const x(3, 4, 4, 0.0);
  EXPECT_THROW(pixel_error_report(x, x, Tensor(Shape{4, 4}, 0.0)), ContractError);
}

TEST(Ssim, SelfSimilarityAndSymmetry)
{
  SeededRng   rng(2);
  Image const x = random_image(rng, 24, 20);
  Image const z = random_image(rng, 24, 20);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-9);
  EXPECT_NEAR(ssim(x, z), ssim(z, x), 1e-12);
  EXPECT_LT(ssim(x, z), 0.5);
}

TEST(Ssim, ConstantZeroVersusOne)
{
  GrayImage const a(16, 16, 0.0);
  GrayImage const b(16, 16, 1.0);
  double const    c1 = 1e-4;
  EXPECT_NEAR(ssim(a, b), c1 / (1.0 + c1), 1e-15);
  EXPECT_NEAR(ssim(a, b), 9.999e-5, 1e-8);
}

TEST(Ssim, TooSmallThrows)
{
  EXPECT_THROW(ssim(GrayImage(10, 16), GrayImage(10, 16)), ContractError);
}

TEST(Fft, RoundTrip)
{
  SeededRng rng(3);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 32}, {64, 4}})
  {
    std::vector<fft::Complex> x(r * c);
    for (auto &v : x)
    {
      v = {rng.normal(), rng.normal()};
    }
    auto const back = fft::inverse2d(fft::forward2d(x, r, c), r, c);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      ASSERT_LT(std::abs(back[i] - x[i]), 1e-10);
    }
  }
}

TEST(Fft, ForwardOfImpulseIsFlat)
{
  std::vector<fft::Complex> x(16, 0.0);
  x[0]          = 1.0;
  auto const f  = fft::forward2d(x, 4, 4);
  for (auto v : f)
  {
    EXPECT_NEAR(std::abs(v - fft::Complex(1.0, 0.0)), 0.0, 1e-15);
  }
}

TEST(Fft, ReflectIndexAndPad)
{
  EXPECT_EQ(fft::reflect_index(-1, 5), 1u);
  EXPECT_EQ(fft::reflect_index(5, 5), 3u);
  EXPECT_EQ(fft::reflect_index(2, 5), 2u);
  EXPECT_EQ(fft::next_pow2(17), 32u);
  EXPECT_EQ(fft::next_pow2(16), 16u);
  auto const p = fft::reflect_pad({1, 2, 3}, 1, 3, 1, 5);
  EXPECT_EQ(p, (std::vector<double>{1, 2, 3, 2, 1}));
}

TEST(PhaseCongruency, ConstantImageHasNoStructure)
{
  GrayImage const pc = phase_congruency(GrayImage(32, 32, 0.4));
  for (double v : pc.data)
  {
    EXPECT_LE(v, 1e-3);
    EXPECT_GE(v, 0.0);
  }
}

TEST(PhaseCongruency, StepEdgePeaksAtTheEdge)
{
  std::size_t const c = 13;
  GrayImage         g(32, 40);
  for (std::size_t y = 0; y < g.height; ++y)
  {
    for (std::size_t x = 0; x < g.width; ++x)
    {
      g.at(y, x) = x < c ? 0.2 : 0.8;
    }
  }
  GrayImage const pc = phase_congruency(g);
  for (std::size_t y = 0; y < pc.height; ++y)
  {
    std::size_t best = 0;
    for (std::size_t x = 1; x < pc.width; ++x)
    {
      best = pc.at(y, x) > pc.at(y, best) ? x : best;
    }
    EXPECT_GE(best + 1, c) << "row " << y;
    EXPECT_LE(best, c + 1) << "row " << y;
  }
}

TEST(PhaseCongruency, ValuesWithinUnitInterval)
{
  SeededRng   rng(4);
  Image const img = random_image(rng, 24, 36, 1);
  for (double v : phase_congruency(luma(img)).data)
  {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Fsim, IdenticalImagesScoreOne)
{
  Image const x = read_image(fixture("texture_a.ppm"));
  EXPECT_NEAR(fsim(x, x, false), 1.0, 1e-9);
  EXPECT_NEAR(fsim(x, x, true), 1.0, 1e-9);
}

TEST(Fsim, Symmetric)
{
  Image const a = read_image(fixture("texture_a.ppm"));
  Image const b = read_image(fixture("texture_b.ppm"));
  EXPECT_NEAR(fsim(a, b, false), fsim(b, a, false), 1e-12);
  EXPECT_NEAR(fsim(a, b, true), fsim(b, a, true), 1e-12);
}

TEST(Fsim, MildBlurScoresHigherThanStrongBlur)
{
  for (auto const *name : {"texture_a.ppm", "texture_b.ppm"})
  {
    Image const x     = read_image(fixture(name));
    double const mild   = fsim(x, box_blur(x, 1), false);
    double const strong = fsim(x, box_blur(x, 3), false);
    EXPECT_GT(mild, strong) << name;
    EXPECT_GT(fsim(x, box_blur(x, 1), true), fsim(x, box_blur(x, 3), true)) << name;
    EXPECT_LT(mild, 1.0);
    EXPECT_GT(strong, 0.0);
  }
}

TEST(Fsim, ColourTermIsOneForGreyImages)
{
  Image const src = read_image(fixture("texture_a.ppm"));
  Image       a(3, src.height, src.width), b(3, src.height, src.width);
  Image const blurred = box_blur(src, 2);
  for (std::size_t y = 0; y < src.height; ++y)
  {
    for (std::size_t x = 0; x < src.width; ++x)
    {
      for (std::size_t c = 0; c < 3; ++c)
      {
        a.at(c, y, x) = src.at(0, y, x);
        b.at(c, y, x) = blurred.at(0, y, x);
      }
    }
  }
  EXPECT_NEAR(fsim(a, b, true), fsim(a, b, false), 1e-12);
}

TEST(Fsim, SizeMismatchThrows)
{
  EXPECT_THROW(fsim(Image(3, 16, 16), Image(3, 16, 20), false), DimensionError);
}

TEST(Entropy, ConstantImageIsZero)
{
  for (double v : local_entropy_map(GrayImage(12, 12, 0.3)).data)
  {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Entropy, FortyVersusFortyOneWindow)
{
  GrayImage g(9, 9);
  for (std::size_t y = 0; y < 9; ++y)
  {
    for (std::size_t x = 0; x < 9; ++x)
    {
      g.at(y, x) = (x + y) % 2 == 0 ? 0.2 : 0.6;
    }
  }
  double const expect = -(40.0 / 81) * std::log2(40.0 / 81) - (41.0 / 81) * std::log2(41.0 / 81);
  EXPECT_NEAR(local_entropy_map(g).at(4, 4), expect, 1e-15);
  EXPECT_NEAR(expect, 0.99989, 1e-5);
}

TEST(Entropy, HandBuiltHalfPlane)
{
  // columns 0..5 dark, 6..11 bright
  GrayImage g(12, 12);
  for (std::size_t y = 0; y < 12; ++y)
  {
    for (std::size_t x = 0; x < 12; ++x)
    {
      g.at(y, x) = x < 6 ? 0.0 : 1.0;
    }
  }
  GrayImage const e = local_entropy_map(g);
  auto h2 = [](double a, double b) { return -a * std::log2(a) - b * std::log2(b); };
  for (std::size_t y = 0; y < 12; ++y)
  {
    // x = 1: columns -3..5 mirror to 3,2,1,0,1,...,5, all dark
    EXPECT_EQ(e.at(y, 1), 0.0);
    // x = 5: columns 1..9, five dark and four bright
    EXPECT_NEAR(e.at(y, 5), h2(45.0 / 81, 36.0 / 81), 1e-15);
    // x = 10: columns 6..14 mirror to 6..11,10,9,8, all bright
    EXPECT_EQ(e.at(y, 10), 0.0);
    // x = 2: columns -2..6 mirror to 2,1,0,...,6, one bright column
    EXPECT_NEAR(e.at(y, 2), h2(72.0 / 81, 9.0 / 81), 1e-15);
  }
  EXPECT_EQ(e.data, brute_force_entropy(g).data);
}

TEST(Entropy, MatchesBruteForceOnRandomImages)
{
  SeededRng rng(5);
  for (int trial = 0; trial < 100; ++trial)
  {
    GrayImage g(16, 16);
    for (auto &v : g.data)
    {
      v = static_cast<double>(rng.below(256)) / 255.0;
    }
    GrayImage const fast = local_entropy_map(g);
    ASSERT_EQ(fast.data, brute_force_entropy(g).data) << "trial " << trial;
    for (double v : fast.data)
    {
      ASSERT_LE(v, std::log2(81.0) + 1e-12);
    }
  }
}

TEST(Entropy, BinRounds)
{
  EXPECT_EQ(entropy_bin(0.0), 0u);
  EXPECT_EQ(entropy_bin(1.0), 255u);
  EXPECT_EQ(entropy_bin(0.5), 128u);
  EXPECT_EQ(entropy_bin(1.5), 255u);
}

TEST(EntropyErrors, IdentityAndJensen)
{
  SeededRng    rng(6);
  Image const  x    = random_image(rng, 16, 16);
  Image const  z    = box_blur(x, 1);
  Tensor const mask = full_mask(16, 16);
  auto const   same = entropy_errors(x, x, mask);
  EXPECT_EQ(same.lemse, 0.0);
  EXPECT_EQ(same.lemae, 0.0);
  auto const e = entropy_errors(x, z, mask);
  EXPECT_GT(e.lemse, 0.0);
  EXPECT_LE(e.lemae, std::sqrt(e.lemse) + 1e-12);
  EXPECT_THROW(entropy_errors(x, z, Tensor(Shape{16, 16}, 0.0)), ContractError);
}

TEST(Sme, HingeMean)
{
  std::vector<ClassifierProbs> p{{"a", 0.9, 0.7}, {"b", 0.3, 0.9}};
  EXPECT_NEAR(sme(p), 0.1, 1e-15);
  std::vector<ClassifierProbs> equal{{"a", 0.4, 0.4}, {"b", 0.8, 0.8}};
  EXPECT_EQ(sme(equal), 0.0);
  EXPECT_THROW(sme({}), ContractError);
}

TEST(Sme, AddingNonLossSampleNeverIncreasesTotal)
{
  SeededRng                    rng(7);
  std::vector<ClassifierProbs> p;
  for (int i = 0; i < 20; ++i)
  {
    p.push_back({std::to_string(i), rng.uniform(), rng.uniform()});
  }
  double const total = sme(p) * static_cast<double>(p.size());
  p.push_back({"extra", 0.3, 0.6});
  EXPECT_LE(sme(p) * static_cast<double>(p.size()), total + 1e-12);
  EXPECT_GE(sme(p), 0.0);
  EXPECT_LE(sme(p), 1.0);
}

TEST(Sme, ProbsCsvRoundTrip)
{
  auto const path = std::filesystem::temp_directory_path() / "casi_probs_test.csv";
  std::vector<ClassifierProbs> p{{"img_0", 0.125, 0.5}, {"img_1", 1.0 / 3.0, 0.0}};
  write_probs_csv(p, path);
  auto const back = read_probs_csv(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].sample_id, "img_1");
  EXPECT_EQ(back[1].p_x, 1.0 / 3.0);
  EXPECT_EQ(back[0].source, ProbSource::External);
  std::filesystem::remove(path);
}

TEST(Evaluate, RowOrderAndMeanIndependentOfThreads)
{
  SeededRng                rng(8);
  std::vector<std::string> ids;
  std::vector<Image>       x, z;
  std::vector<Tensor>      masks;
  for (int i = 0; i < 5; ++i)
  {
    ids.push_back("s" + std::to_string(i));
    x.push_back(random_image(rng, 16, 16));
    z.push_back(box_blur(x.back(), 1));
    Tensor m(Shape{16, 16}, 0.0);
    for (std::size_t k = 4; k < 12; ++k)
    {
      for (std::size_t j = 4; j < 12; ++j)
      {
        m[k * 16 + j] = 1.0;
      }
    }
    masks.push_back(m);
  }
  EvalOptions one;
  EvalOptions four;
  four.threads   = 4;
  auto const a   = evaluate(ids, x, z, masks, std::nullopt, one);
  auto const b   = evaluate(ids, x, z, masks, std::nullopt, four);
  ASSERT_EQ(a.rows.size(), 5u);
  EXPECT_EQ(report_csv(a), report_csv(b));
  EXPECT_EQ(a.rows[3].sample_id, "s3");
  EXPECT_FALSE(a.has_sme);
  double l1 = 0.0;
  for (auto const &r : a.rows)
  {
    l1 += r.l1_percent;
  }
  EXPECT_NEAR(a.mean.l1_percent, l1 / 5.0, 1e-12);
}

TEST(Evaluate, IdentityReport)
{
  SeededRng                rng(9);
  std::vector<Image>       x{random_image(rng, 16, 16), random_image(rng, 16, 16)};
  std::vector<Tensor>      masks(2, Tensor(Shape{16, 16}, 1.0));
  std::vector<ClassifierProbs> probs{{"a", 0.7, 0.7}, {"b", 0.2, 0.2}};
  auto const r = evaluate({"a", "b"}, x, x, masks, probs, EvalOptions{});
  EXPECT_EQ(r.mean.psnr_db, kPsnrCap);
  EXPECT_NEAR(r.mean.ssim, 1.0, 1e-9);
  EXPECT_NEAR(r.mean.fsimc, 1.0, 1e-9);
  EXPECT_EQ(r.mean.lemse, 0.0);
  EXPECT_TRUE(r.has_sme);
  EXPECT_EQ(r.mean.sme, 0.0);
}

TEST(Report, CsvAndJsonCarryNineMetrics)
{
  EXPECT_EQ(metric_columns().size(), 9u);
  MetricReport report;
  MetricRow    row;
  row.sample_id = "x";
  row.psnr_db   = 20.0;
  report.rows.push_back(row);
  report.mean           = row;
  report.mean.sample_id = "mean";
  std::string const csv = report_csv(report);
  std::istringstream in(csv);
  std::string        header;
  std::getline(in, header);
  EXPECT_EQ(header, "sample_id,l1_percent,l2_percent,psnr_db,ssim,fsim,fsimc,lemse,lemae,sme");
  auto const j = nlohmann::json::parse(report_json(report, "seed=1\n"));
  EXPECT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["mean"]["psnr_db"].get<double>(), 20.0);
  EXPECT_EQ(j["config"].get<std::string>(), "seed=1\n");
}
