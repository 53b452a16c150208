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
#include "casi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace casi {
namespace {

struct PcParams
{
  std::size_t scales{4};
  std::size_t orientations{4};
  double      min_wavelength{6.0};
  double      mult{2.0};
  double      sigma_onf{0.55};
  double      d_theta_on_sigma{1.2};
  double      k{2.0};
  double      epsilon{1e-4};
  double      lowpass_cutoff{0.45};
  int         lowpass_order{15};
};

double frequency(std::size_t i, std::size_t n)
{
  if (n % 2 == 0)
  {
    long const v = i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
    return static_cast<double>(v) / static_cast<double>(n);
  }
  if (n == 1)
  {
    return 0.0;
  }
  long const half = static_cast<long>(n - 1) / 2;
  long const v    = i <= static_cast<std::size_t>(half) ? static_cast<long>(i)
                                                        : static_cast<long>(i) - static_cast<long>(n);
  return static_cast<double>(v) / static_cast<double>(n - 1);
}

double median(std::vector<double> v)
{
  std::size_t const n   = v.size();
  auto const        mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double const upper = *mid;
  if (n % 2 == 1)
  {
    return upper;
  }
  double const lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<double> phase_congruency_grid(std::vector<double> const &img, std::size_t rows,
                                          std::size_t cols, PcParams const &p)
{
  using fft::Complex;
  std::size_t const n = rows * cols;

  std::vector<Complex> spectrum(img.begin(), img.end());
  spectrum = fft::forward2d(spectrum, rows, cols);

  std::vector<double> radius(n), sintheta(n), costheta(n), lowpass(n);
  for (std::size_t i = 0; i < rows; ++i)
  {
    double const fy = frequency(i, rows);
    for (std::size_t j = 0; j < cols; ++j)
    {
      double const fx    = frequency(j, cols);
      std::size_t  idx   = i * cols + j;
      double const r     = std::sqrt(fx * fx + fy * fy);
      double const theta = std::atan2(-fy, fx);
      lowpass[idx]       = 1.0 / (1.0 + std::pow(r / p.lowpass_cutoff, 2.0 * p.lowpass_order));
      radius[idx]        = r;
      sintheta[idx]      = std::sin(theta);
      costheta[idx]      = std::cos(theta);
    }
  }
  radius[0] = 1.0;

  std::vector<std::vector<double>> log_gabor(p.scales, std::vector<double>(n));
  double const log_sigma = std::log(p.sigma_onf);
  for (std::size_t s = 0; s < p.scales; ++s)
  {
    double const fo = 1.0 / (p.min_wavelength * std::pow(p.mult, static_cast<double>(s)));
    for (std::size_t idx = 0; idx < n; ++idx)
    {
      double const l = std::log(radius[idx] / fo);
      log_gabor[s][idx] = std::exp(-(l * l) / (2.0 * log_sigma * log_sigma)) * lowpass[idx];
    }
    log_gabor[s][0] = 0.0;
  }

  double const theta_sigma = std::numbers::pi / static_cast<double>(p.orientations) / p.d_theta_on_sigma;
  double const root_n      = std::sqrt(static_cast<double>(n));

  std::vector<double> energy_all(n, 0.0);
  std::vector<double> an_all(n, 0.0);

  for (std::size_t o = 0; o < p.orientations; ++o)
  {
    double const angle = static_cast<double>(o) * std::numbers::pi / static_cast<double>(p.orientations);
    std::vector<double> spread(n);
    for (std::size_t idx = 0; idx < n; ++idx)
    {
      double const ds     = sintheta[idx] * std::cos(angle) - costheta[idx] * std::sin(angle);
      double const dc     = costheta[idx] * std::cos(angle) + sintheta[idx] * std::sin(angle);
      double const dtheta = std::abs(std::atan2(ds, dc));
      spread[idx]         = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
    }

    std::vector<double>               sum_e(n, 0.0), sum_o(n, 0.0), sum_an(n, 0.0);
    std::vector<std::vector<Complex>> eo(p.scales);
    std::vector<std::vector<double>>  spatial_filter(p.scales);
    double                            em_n = 0.0;
    for (std::size_t s = 0; s < p.scales; ++s)
    {
      std::vector<Complex> filter(n);
      std::vector<Complex> product(n);
      for (std::size_t idx = 0; idx < n; ++idx)
      {
        double const f = log_gabor[s][idx] * spread[idx];
        filter[idx]    = f;
        product[idx]   = spectrum[idx] * f;
        if (s == 0)
        {
          em_n += f * f;
        }
      }
      auto const impulse = fft::inverse2d(filter, rows, cols);
      spatial_filter[s].resize(n);
      for (std::size_t idx = 0; idx < n; ++idx)
      {
        spatial_filter[s][idx] = impulse[idx].real() * root_n;
      }
      eo[s] = fft::inverse2d(product, rows, cols);
      for (std::size_t idx = 0; idx < n; ++idx)
      {
        sum_an[idx] += std::abs(eo[s][idx]);
        sum_e[idx] += eo[s][idx].real();
        sum_o[idx] += eo[s][idx].imag();
      }
    }

    std::vector<double> energy(n, 0.0);
    for (std::size_t idx = 0; idx < n; ++idx)
    {
      double const x_energy = std::hypot(sum_e[idx], sum_o[idx]) + p.epsilon;
      double const mean_e   = sum_e[idx] / x_energy;
      double const mean_o   = sum_o[idx] / x_energy;
      for (std::size_t s = 0; s < p.scales; ++s)
      {
        double const e = eo[s][idx].real();
        double const q = eo[s][idx].imag();
        energy[idx] += e * mean_e + q * mean_o - std::abs(e * mean_o - q * mean_e);
      }
    }

    // noise threshold from the smallest scale's response distribution
    std::vector<double> e2(n);
    for (std::size_t idx = 0; idx < n; ++idx)
    {
      e2[idx] = std::norm(eo[0][idx]);
    }
    double const mean_e2n    = -median(e2) / std::log(0.5);
    double const noise_power = em_n > 0.0 ? mean_e2n / em_n : 0.0;
    double       sum_an2     = 0.0;
    double       sum_aiaj    = 0.0;
    for (std::size_t idx = 0; idx < n; ++idx)
    {
      for (std::size_t si = 0; si < p.scales; ++si)
      {
        sum_an2 += spatial_filter[si][idx] * spatial_filter[si][idx];
        for (std::size_t sj = si + 1; sj < p.scales; ++sj)
        {
          sum_aiaj += spatial_filter[si][idx] * spatial_filter[sj][idx];
        }
      }
    }
    double const noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_aiaj;
    double const tau           = std::sqrt(std::max(0.0, noise_energy2) / 2.0);
    double const noise_mean    = tau * std::sqrt(std::numbers::pi / 2.0);
    double const noise_sigma   = std::sqrt((2.0 - std::numbers::pi / 2.0) * tau * tau);
    double const threshold     = (noise_mean + p.k * noise_sigma) / 1.7;

    for (std::size_t idx = 0; idx < n; ++idx)
    {
      energy_all[idx] += std::max(energy[idx] - threshold, 0.0);
      an_all[idx] += sum_an[idx];
    }
  }

  std::vector<double> pc(n);
  for (std::size_t idx = 0; idx < n; ++idx)
  {
    pc[idx] = std::clamp(energy_all[idx] / (an_all[idx] + p.epsilon), 0.0, 1.0);
  }
  return pc;
}

}  // namespace

GrayImage phase_congruency(GrayImage const &g)
{
  PcParams const    params;
  // image centred in a mirrored grid at least twice its size
  std::size_t const rows = std::max<std::size_t>(2, fft::next_pow2(2 * g.height));
  std::size_t const cols = std::max<std::size_t>(2, fft::next_pow2(2 * g.width));
  std::size_t const top  = (rows - g.height) / 2;
  std::size_t const left = (cols - g.width) / 2;
  std::vector<double> padded = fft::reflect_pad(g.data, g.height, g.width, rows, cols, top, left);
  for (auto &v : padded)
  {
    v *= 255.0;
  }
  auto const grid = phase_congruency_grid(padded, rows, cols, params);
  GrayImage  out(g.height, g.width);
  for (std::size_t y = 0; y < g.height; ++y)
  {
    for (std::size_t x = 0; x < g.width; ++x)
    {
      out.at(y, x) = grid[(y + top) * cols + x + left];
    }
  }
  return out;
}

}  // namespace casi
