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

#include "casi/metrics.hpp"

#include "casi/fft.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace casi {
namespace {

void require_same_size(Image const &x, Image const &z, char const *what)
{
  if (x.channels != z.channels || x.height != z.height || x.width != z.width)
  {
    char const *axis = x.channels != z.channels ? "C" : (x.height != z.height ? "H" : "W");
    throw DimensionError(std::string(what) + ": images differ in size", axis);
  }
}

void require_mask(Tensor const &mask, std::size_t h, std::size_t w, char const *what)
{
  if (mask.ndim() != 2 || mask.dim(0) != h || mask.dim(1) != w)
  {
    throw DimensionError(std::string(what) + ": mask does not match image", "H");
  }
}

std::string number(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

GrayImage luma(Image const &image)
{
  GrayImage g(image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y)
  {
    for (std::size_t x = 0; x < image.width; ++x)
    {
      double v = image.channels == 1 ? image.at(0, y, x)
                                     : 0.299 * image.at(0, y, x) + 0.587 * image.at(1, y, x) +
                                           0.114 * image.at(2, y, x);
      g.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return g;
}

double psnr_from_mse(double mse)
{
  return mse < 1e-10 ? kPsnrCap : 10.0 * std::log10(1.0 / mse);
}

PixelErrors pixel_error_report(Image const &x, Image const &z, Tensor const &mask)
{
  require_same_size(x, z, "pixel_error_report");
  require_mask(mask, x.height, x.width, "pixel_error_report");
  std::size_t const plane = x.height * x.width;
  double            l1 = 0.0, l2 = 0.0;
  std::size_t       count = 0;
  for (std::size_t j = 0; j < x.data.size(); ++j)
  {
    if (mask[j % plane] != 0.0)
    {
      double const d = x.data[j] - z.data[j];
      l1 += std::abs(d);
      l2 += d * d;
      ++count;
    }
  }
  if (count == 0)
  {
    throw ContractError("pixel_error_report: mask is empty");
  }
  double const n = static_cast<double>(count);
  return {100.0 * l1 / n, 100.0 * l2 / n, psnr_from_mse(l2 / n)};
}

double ssim(GrayImage const &x, GrayImage const &z)
{
  if (x.height != z.height || x.width != z.width)
  {
    throw DimensionError("ssim: images differ in size", x.height != z.height ? "H" : "W");
  }
  constexpr std::size_t kWin = 11;
  if (x.height < kWin || x.width < kWin)
  {
    throw ContractError("ssim: image smaller than the 11x11 window");
  }
  std::array<double, kWin * kWin> window{};
  double                          total = 0.0;
  for (std::size_t i = 0; i < kWin; ++i)
  {
    for (std::size_t j = 0; j < kWin; ++j)
    {
      double const dy = static_cast<double>(i) - 5.0;
      double const dx = static_cast<double>(j) - 5.0;
      window[i * kWin + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      total += window[i * kWin + j];
    }
  }
  for (auto &w : window)
  {
    w /= total;
  }
  double const c1 = (0.01 * 1.0) * (0.01 * 1.0);
  double const c2 = (0.03 * 1.0) * (0.03 * 1.0);

  std::size_t const oh  = x.height - kWin + 1;
  std::size_t const ow  = x.width - kWin + 1;
  double            acc = 0.0;
  for (std::size_t y = 0; y < oh; ++y)
  {
    for (std::size_t xx = 0; xx < ow; ++xx)
    {
      double mx = 0, mz = 0, sxx = 0, szz = 0, sxz = 0;
      for (std::size_t i = 0; i < kWin; ++i)
      {
        for (std::size_t j = 0; j < kWin; ++j)
        {
          double const w = window[i * kWin + j];
          double const a = x.at(y + i, xx + j);
          double const b = z.at(y + i, xx + j);
          mx += w * a;
          mz += w * b;
          sxx += w * a * a;
          szz += w * b * b;
          sxz += w * a * b;
        }
      }
      double const vx  = sxx - mx * mx;
      double const vz  = szz - mz * mz;
      double const cxz = sxz - mx * mz;
      acc += ((2.0 * mx * mz + c1) * (2.0 * cxz + c2)) / ((mx * mx + mz * mz + c1) * (vx + vz + c2));
    }
  }
  return acc / static_cast<double>(oh * ow);
}

double ssim(Image const &x, Image const &z)
{
  require_same_size(x, z, "ssim");
  return ssim(luma(x), luma(z));
}

namespace {

GrayImage gradient_magnitude(GrayImage const &g)
{
  static constexpr double k[3][3] = {{3, 0, -3}, {10, 0, -10}, {3, 0, -3}};
  GrayImage               out(g.height, g.width);
  auto value = [&](long y, long x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<long>(g.height) || x >= static_cast<long>(g.width))
    {
      return 0.0;
    }
    return g.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) * 255.0;
  };
  for (long y = 0; y < static_cast<long>(g.height); ++y)
  {
    for (long x = 0; x < static_cast<long>(g.width); ++x)
    {
      double gx = 0.0, gy = 0.0;
      for (long i = 0; i < 3; ++i)
      {
        for (long j = 0; j < 3; ++j)
        {
          gx += k[i][j] / 16.0 * value(y + i - 1, x + j - 1);
          gy += k[j][i] / 16.0 * value(y + i - 1, x + j - 1);
        }
      }
      out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double similarity(double a, double b, double t)
{
  return (2.0 * a * b + t) / (a * a + b * b + t);
}

constexpr double kT1     = 0.85;
constexpr double kT2     = 160.0;
constexpr double kT3     = 200.0;
constexpr double kLambda = 0.03;

}  // namespace

PCMaps pc_maps(Image const &x, Image const &z)
{
  require_same_size(x, z, "fsim");
  GrayImage const gx = luma(x);
  GrayImage const gz = luma(z);
  PCMaps          m;
  m.pc1                = phase_congruency(gx);
  m.pc2                = phase_congruency(gz);
  GrayImage const g1   = gradient_magnitude(gx);
  GrayImage const g2   = gradient_magnitude(gz);
  m.s_pc = m.s_g = m.pc_m = GrayImage(x.height, x.width);
  for (std::size_t i = 0; i < gx.data.size(); ++i)
  {
    m.s_pc.data[i] = similarity(m.pc1.data[i], m.pc2.data[i], kT1);
    m.s_g.data[i]  = similarity(g1.data[i], g2.data[i], kT2);
    m.pc_m.data[i] = std::max(m.pc1.data[i], m.pc2.data[i]);
  }
  return m;
}

double fsim(Image const &x, Image const &z, bool color)
{
  PCMaps const m = pc_maps(x, z);
  std::size_t const n = m.pc_m.data.size();

  std::vector<double> chroma(n, 1.0);
  if (color && x.channels == 3)
  {
    for (std::size_t y = 0; y < x.height; ++y)
    {
      for (std::size_t c = 0; c < x.width; ++c)
      {
        auto iq = [&](Image const &im) {
          double const r = im.at(0, y, c) * 255.0, g = im.at(1, y, c) * 255.0, b = im.at(2, y, c) * 255.0;
          return std::pair{0.596 * r - 0.274 * g - 0.322 * b, 0.211 * r - 0.523 * g + 0.312 * b};
        };
        auto const [i1, q1] = iq(x);
        auto const [i2, q2] = iq(z);
        double const sim    = similarity(i1, i2, kT3) * similarity(q1, q2, kT3);
        chroma[y * x.width + c] = std::pow(std::complex<double>(sim, 0.0), kLambda).real();
      }
    }
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    double const sl = m.s_pc.data[i] * m.s_g.data[i] * chroma[i];
    num += sl * m.pc_m.data[i];
    den += m.pc_m.data[i];
  }
  if (den <= 0.0)
  {
    // structureless pair: fall back to uniform weights
    num = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      num += m.s_pc.data[i] * m.s_g.data[i] * chroma[i];
    }
    return num / static_cast<double>(n);
  }
  return num / den;
}

unsigned entropy_bin(double v)
{
  return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

GrayImage local_entropy_map(GrayImage const &g)
{
  constexpr long kRadius = 4;
  constexpr double kCount = 81.0;
  GrayImage        out(g.height, g.width);
  std::vector<unsigned> bins(g.data.size());
  for (std::size_t i = 0; i < g.data.size(); ++i)
  {
    bins[i] = entropy_bin(g.data[i]);
  }
  std::array<unsigned, 256> hist{};
  for (std::size_t y = 0; y < g.height; ++y)
  {
    for (std::size_t x = 0; x < g.width; ++x)
    {
      hist.fill(0);
      for (long dy = -kRadius; dy <= kRadius; ++dy)
      {
        std::size_t const sy = fft::reflect_index(static_cast<long>(y) + dy, g.height);
        for (long dx = -kRadius; dx <= kRadius; ++dx)
        {
          std::size_t const sx = fft::reflect_index(static_cast<long>(x) + dx, g.width);
          ++hist[bins[sy * g.width + sx]];
        }
      }
      double h = 0.0;
      for (unsigned c : hist)
      {
        if (c != 0)
        {
          double const p = c / kCount;
          h -= p * std::log2(p);
        }
      }
      out.at(y, x) = h;
    }
  }
  return out;
}

EntropyErrors entropy_errors(Image const &x, Image const &z, Tensor const &mask)
{
  require_same_size(x, z, "entropy_errors");
  require_mask(mask, x.height, x.width, "entropy_errors");
  GrayImage const ex = local_entropy_map(luma(x));
  GrayImage const ez = local_entropy_map(luma(z));
  double          se = 0.0, ae = 0.0;
  std::size_t     count = 0;
  for (std::size_t i = 0; i < ex.data.size(); ++i)
  {
    if (mask[i] != 0.0)
    {
      double const d = ex.data[i] - ez.data[i];
      se += d * d;
      ae += std::abs(d);
      ++count;
    }
  }
  if (count == 0)
  {
    throw ContractError("entropy_errors: mask is empty");
  }
  return {se / static_cast<double>(count), ae / static_cast<double>(count)};
}

double sme(std::vector<ClassifierProbs> const &samples)
{
  if (samples.empty())
  {
    throw ContractError("sme: no samples");
  }
  double acc = 0.0;
  for (auto const &s : samples)
  {
    acc += std::max(0.0, s.p_x - s.p_z);
  }
  return acc / static_cast<double>(samples.size());
}

std::vector<ClassifierProbs> read_probs_csv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open probabilities file " + path.string());
  }
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r')
  {
    line.pop_back();
  }
  if (line != "sample_id,p_x,p_z")
  {
    throw FormatError(FormatError::Kind::Malformed, "probabilities CSV must start with 'sample_id,p_x,p_z'");
  }
  std::vector<ClassifierProbs> out;
  std::size_t                  line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    std::stringstream        ss(line);
    std::string              id, px, pz, extra;
    if (!std::getline(ss, id, ',') || !std::getline(ss, px, ',') || !std::getline(ss, pz, ',') ||
        std::getline(ss, extra, ','))
    {
      throw FormatError(FormatError::Kind::Malformed,
                        "probabilities CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    ClassifierProbs p;
    p.sample_id = id;
    p.source    = ProbSource::External;
    try
    {
      std::size_t used = 0;
      p.p_x            = std::stod(px, &used);
      if (used != px.size())
      {
        throw std::invalid_argument(px);
      }
      p.p_z = std::stod(pz, &used);
      if (used != pz.size())
      {
        throw std::invalid_argument(pz);
      }
    }
    catch (std::exception const &)
    {
      throw FormatError(FormatError::Kind::Malformed,
                        "probabilities CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (!(p.p_x >= 0.0 && p.p_x <= 1.0 && p.p_z >= 0.0 && p.p_z <= 1.0))
    {
      throw FormatError(FormatError::Kind::Malformed,
                        "probabilities CSV line " + std::to_string(line_no) + ": value outside [0,1]");
    }
    out.push_back(p);
  }
  return out;
}

void write_probs_csv(std::vector<ClassifierProbs> const &probs, std::filesystem::path const &path)
{
  std::string text = "sample_id,p_x,p_z\n";
  for (auto const &p : probs)
  {
    text += p.sample_id + "," + number(p.p_x) + "," + number(p.p_z) + "\n";
  }
  write_file_atomic(path, std::span(reinterpret_cast<std::uint8_t const *>(text.data()), text.size()));
}

MetricReport evaluate(std::vector<std::string> const &ids, std::vector<Image> const &x,
                      std::vector<Image> const &z, std::vector<Tensor> const &masks,
                      std::optional<std::vector<ClassifierProbs>> const &probs,
                      EvalOptions const &options)
{
  std::size_t const n = x.size();
  if (n == 0)
  {
    throw ContractError("evaluate: no samples");
  }
  if (z.size() != n || masks.size() != n || ids.size() != n || (probs && probs->size() != n))
  {
    throw ContractError("evaluate: inputs have different sample counts");
  }
  MetricReport report;
  report.rows.resize(n);
  report.has_sme = probs.has_value();

  std::vector<std::string> errors(n);
  long const               count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(std::max<std::size_t>(1, options.threads)))
  for (long i = 0; i < count; ++i)
  {
    auto const k = static_cast<std::size_t>(i);
    try
    {
      MetricRow &row = report.rows[k];
      row.sample_id  = ids[k];
      Tensor const pixel_mask =
          options.full_image ? Tensor::ones(Shape{x[k].height, x[k].width}) : masks[k];
      PixelErrors const pe = pixel_error_report(x[k], z[k], pixel_mask);
      row.l1_percent       = pe.l1_percent;
      row.l2_percent       = pe.l2_percent;
      row.psnr_db          = pe.psnr_db;
      row.ssim             = ssim(x[k], z[k]);
      row.fsim             = fsim(x[k], z[k], false);
      row.fsimc            = fsim(x[k], z[k], true);
      EntropyErrors const ee = entropy_errors(x[k], z[k], masks[k]);
      row.lemse              = ee.lemse;
      row.lemae              = ee.lemae;
      row.sme                = probs ? std::max(0.0, (*probs)[k].p_x - (*probs)[k].p_z) : 0.0;
    }
    catch (std::exception const &e)
    {
      errors[k] = ids[k] + ": " + e.what();
    }
  }
  for (auto const &e : errors)
  {
    if (!e.empty())
    {
      throw Error("evaluate: " + e);
    }
  }

  MetricRow &m = report.mean;
  m.sample_id  = "mean";
  for (auto const &r : report.rows)
  {
    m.l1_percent += r.l1_percent;
    m.l2_percent += r.l2_percent;
    m.psnr_db += r.psnr_db;
    m.ssim += r.ssim;
    m.fsim += r.fsim;
    m.fsimc += r.fsimc;
    m.lemse += r.lemse;
    m.lemae += r.lemae;
    m.sme += r.sme;
  }
  double const dn = static_cast<double>(n);
  for (double *f : {&m.l1_percent, &m.l2_percent, &m.psnr_db, &m.ssim, &m.fsim, &m.fsimc, &m.lemse,
                    &m.lemae, &m.sme})
  {
    *f /= dn;
  }
  return report;
}

std::vector<std::string> metric_columns()
{
  return {"l1_percent", "l2_percent", "psnr_db", "ssim", "fsim", "fsimc", "lemse", "lemae", "sme"};
}

namespace {

std::vector<double> row_values(MetricRow const &r)
{
  return {r.l1_percent, r.l2_percent, r.psnr_db, r.ssim, r.fsim, r.fsimc, r.lemse, r.lemae, r.sme};
}

}  // namespace

std::string report_csv(MetricReport const &report)
{
  std::string out = "sample_id";
  for (auto const &c : metric_columns())
  {
    out += "," + c;
  }
  out += "\n";
  auto emit = [&](MetricRow const &r) {
    out += r.sample_id;
    auto const v = row_values(r);
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      out += ",";
      out += (i == 8 && !report.has_sme) ? std::string("") : number(v[i]);
    }
    out += "\n";
  };
  for (auto const &r : report.rows)
  {
    emit(r);
  }
  emit(report.mean);
  return out;
}

std::string report_json(MetricReport const &report, std::string const &config)
{
  auto const cols = metric_columns();
  auto       row  = [&](MetricRow const &r) {
    nlohmann::ordered_json j;
    j["sample_id"] = r.sample_id;
    auto const v   = row_values(r);
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      if (i == 8 && !report.has_sme)
      {
        j[cols[i]] = nullptr;
      }
      else
      {
        j[cols[i]] = v[i];
      }
    }
    return j;
  };
  nlohmann::ordered_json doc;
  doc["config"] = config;
  doc["rows"]   = nlohmann::ordered_json::array();
  for (auto const &r : report.rows)
  {
    doc["rows"].push_back(row(r));
  }
  doc["mean"] = row(report.mean);
  return doc.dump(2) + "\n";
}

}  // namespace casi
