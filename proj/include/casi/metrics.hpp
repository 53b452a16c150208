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
#include "casi/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace casi {

/// H x W luminance in [0, 1].
struct GrayImage
{
  std::size_t         height{0};
  std::size_t         width{0};
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, double fill = 0.0)
    : height(h)
    , width(w)
    , data(h * w, fill)
  {}

  double &at(std::size_t y, std::size_t x)
  {
    return data[y * width + x];
  }
  double at(std::size_t y, std::size_t x) const
  {
    return data[y * width + x];
  }
};

/// 0.299 R + 0.587 G + 0.114 B, clamped to [0, 1]. One-channel images pass
/// through (clamped).
GrayImage luma(Image const &image);

struct PixelErrors
{
  double l1_percent{0.0};
  double l2_percent{0.0};
  double psnr_db{0.0};
};

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / mse), or kPsnrCap when mse < 1e-10.
double psnr_from_mse(double mse);

/// Errors over the pixels with mask 1, all channels. Throws ContractError for
/// an empty mask.
PixelErrors pixel_error_report(Image const &x, Image const &z, Tensor const &mask);

/// Mean SSIM over every fully-contained 11x11 Gaussian window (sigma 1.5,
/// K1 0.01, K2 0.03, L 1). Throws ContractError when the image is smaller
/// than the window.
double ssim(GrayImage const &x, GrayImage const &z);
double ssim(Image const &x, Image const &z);

/// Phase congruency in [0, 1] from a 4-scale, 4-orientation log-Gabor bank.
/// The input is mirrored into a centred power-of-two grid at least twice its
/// size before the FFT, so the periodic seam stays away from the image.
GrayImage phase_congruency(GrayImage const &g);

struct PCMaps
{
  GrayImage pc1;
  GrayImage pc2;
  GrayImage s_pc;
  GrayImage s_g;
  GrayImage pc_m;
};

PCMaps pc_maps(Image const &x, Image const &z);

/// FSIM, or FSIMc when `color`. Throws DimensionError on size mismatch.
double fsim(Image const &x, Image const &z, bool color);

/// Shannon entropy (bits) of the 256-bin histogram of 8-bit luma in each
/// pixel's 9x9 neighbourhood; borders mirror without repeating the edge.
GrayImage local_entropy_map(GrayImage const &g);

/// 8-bit bin used by the entropy histogram: round(v * 255).
unsigned entropy_bin(double v);

struct EntropyErrors
{
  double lemse{0.0};
  double lemae{0.0};
};

/// Squared and absolute entropy-map differences averaged over mask-1 pixels.
EntropyErrors entropy_errors(Image const &x, Image const &z, Tensor const &mask);

enum class ProbSource
{
  BuiltIn,
  External,
};

struct ClassifierProbs
{
  std::string sample_id;
  double      p_x{0.0};
  double      p_z{0.0};
  ProbSource  source{ProbSource::BuiltIn};
};

/// (1/n) sum max(0, p_x - p_z). Throws ContractError for an empty list.
double sme(std::vector<ClassifierProbs> const &samples);

/// CSV with header `sample_id,p_x,p_z`.
std::vector<ClassifierProbs> read_probs_csv(std::filesystem::path const &path);
void write_probs_csv(std::vector<ClassifierProbs> const &probs, std::filesystem::path const &path);

struct MetricRow
{
  std::string sample_id;
  double      l1_percent{0.0};
  double      l2_percent{0.0};
  double      psnr_db{0.0};
  double      ssim{0.0};
  double      fsim{0.0};
  double      fsimc{0.0};
  double      lemse{0.0};
  double      lemae{0.0};
  double      sme{0.0};  ///< per-sample hinge; the aggregate is the SME
};

struct MetricReport
{
  std::vector<MetricRow> rows;
  MetricRow              mean;
  bool                   has_sme{false};
};

struct EvalOptions
{
  bool        full_image{false};  ///< pixel errors over the whole composite
  std::size_t threads{1};
};

/// Evaluates composites `z` against ground truth `x`. `probs`, when given,
/// is index-aligned with the samples. Rows keep input order for any thread
/// count.
MetricReport evaluate(std::vector<std::string> const &ids, std::vector<Image> const &x,
                      std::vector<Image> const &z, std::vector<Tensor> const &masks,
                      std::optional<std::vector<ClassifierProbs>> const &probs,
                      EvalOptions const &options);

std::vector<std::string> metric_columns();
std::string              report_csv(MetricReport const &report);
/// JSON text mirroring the CSV fields, with `config` embedded verbatim.
std::string report_json(MetricReport const &report, std::string const &config);

}  // namespace casi
