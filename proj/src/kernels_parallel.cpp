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

#include "casi/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace casi::kernels {

int thread_count()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n)
{
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace parallel {

namespace {

constexpr std::size_t kColumnBlock = 256;

using Index = long;  // OpenMP loop counters must be signed

// Valid output-column range [lo, hi) for kernel tap j: those ow with
// 0 <= ow*stride + j - pad < in_w.
void column_range(ConvGeometry const &g, std::size_t j, std::size_t &lo, std::size_t &hi)
{
  std::size_t const ow_n = g.out_w();
  lo                     = 0;
  if (j < g.pad)
  {
    lo = (g.pad - j + g.stride - 1) / g.stride;
  }
  // largest ow with ow*stride + j - pad <= in_w - 1
  std::size_t const limit = g.in_w - 1 + g.pad;
  hi                      = (limit >= j) ? std::min(ow_n, (limit - j) / g.stride + 1) : 0;
  lo                      = std::min(lo, hi);
}

// col[(c*kh + i)*kw + j][n*P + oh*ow_n + ow]
void im2col(ConvGeometry const &g, std::span<double const> input, std::vector<double> &col)
{
  std::size_t const oh_n = g.out_h();
  std::size_t const ow_n = g.out_w();
  std::size_t const np   = g.batch * oh_n * ow_n;
  std::size_t const rows = g.in_channels * g.kernel_h * g.kernel_w;
  col.assign(rows * np, 0.0);

#pragma omp parallel for schedule(static)
  for (Index r = 0; r < static_cast<Index>(rows); ++r)
  {
    auto const  row = static_cast<std::size_t>(r);
    std::size_t const c   = row / (g.kernel_h * g.kernel_w);
    std::size_t const i   = (row / g.kernel_w) % g.kernel_h;
    std::size_t const j   = row % g.kernel_w;
    std::size_t       lo, hi;
    column_range(g, j, lo, hi);
    double *dst = col.data() + row * np;
    for (std::size_t n = 0; n < g.batch; ++n)
    {
      double const *plane = input.data() + (n * g.in_channels + c) * g.in_h * g.in_w;
      for (std::size_t oh = 0; oh < oh_n; ++oh)
      {
        auto const y = static_cast<long>(oh * g.stride + i) - static_cast<long>(g.pad);
        if (y < 0 || y >= static_cast<long>(g.in_h))
        {
          continue;
        }
        double const *src = plane + static_cast<std::size_t>(y) * g.in_w;
        double       *out = dst + (n * oh_n + oh) * ow_n;
        for (std::size_t ow = lo; ow < hi; ++ow)
        {
          out[ow] = src[ow * g.stride + j - g.pad];
        }
      }
    }
  }
}

// Inverse scatter of im2col; one thread per (n, c) input plane.
void col2im(ConvGeometry const &g, std::vector<double> const &col, std::span<double> grad_input)
{
  std::size_t const oh_n = g.out_h();
  std::size_t const ow_n = g.out_w();
  std::size_t const np   = g.batch * oh_n * ow_n;
  std::fill(grad_input.begin(), grad_input.end(), 0.0);

#pragma omp parallel for schedule(static)
  for (Index p = 0; p < static_cast<Index>(g.batch * g.in_channels); ++p)
  {
    std::size_t const n     = static_cast<std::size_t>(p) / g.in_channels;
    std::size_t const c     = static_cast<std::size_t>(p) % g.in_channels;
    double           *plane = grad_input.data() + (n * g.in_channels + c) * g.in_h * g.in_w;
    for (std::size_t i = 0; i < g.kernel_h; ++i)
    {
      for (std::size_t j = 0; j < g.kernel_w; ++j)
      {
        std::size_t lo, hi;
        column_range(g, j, lo, hi);
        double const *src = col.data() + ((c * g.kernel_h + i) * g.kernel_w + j) * np;
        for (std::size_t oh = 0; oh < oh_n; ++oh)
        {
          auto const y = static_cast<long>(oh * g.stride + i) - static_cast<long>(g.pad);
          if (y < 0 || y >= static_cast<long>(g.in_h))
          {
            continue;
          }
          double       *dst = plane + static_cast<std::size_t>(y) * g.in_w;
          double const *row = src + (n * oh_n + oh) * ow_n;
          for (std::size_t ow = lo; ow < hi; ++ow)
          {
            dst[ow * g.stride + j - g.pad] += row[ow];
          }
        }
      }
    }
  }
}

}  // namespace

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
            std::span<double const> b, std::span<double> out)
{
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii)
  {
    auto const i   = static_cast<std::size_t>(ii);
    double    *row = out.data() + i * n;
    std::fill(row, row + n, 0.0);
    for (std::size_t jb = 0; jb < n; jb += kColumnBlock)
    {
      std::size_t const je = std::min(n, jb + kColumnBlock);
      for (std::size_t p = 0; p < k; ++p)
      {
        double const  aip  = a[i * k + p];
        double const *brow = b.data() + p * n;
        for (std::size_t j = jb; j < je; ++j)
        {
          row[j] += aip * brow[j];
        }
      }
    }
  }
}

void matmul_at_b(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
                 std::span<double const> b, std::span<double> out)
{
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii)
  {
    auto const i   = static_cast<std::size_t>(ii);
    double    *row = out.data() + i * n;
    std::fill(row, row + n, 0.0);
    for (std::size_t jb = 0; jb < n; jb += kColumnBlock)
    {
      std::size_t const je = std::min(n, jb + kColumnBlock);
      for (std::size_t p = 0; p < k; ++p)
      {
        double const  api  = a[p * m + i];
        double const *brow = b.data() + p * n;
        for (std::size_t j = jb; j < je; ++j)
        {
          row[j] += api * brow[j];
        }
      }
    }
  }
}

void matmul_a_bt(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
                 std::span<double const> b, std::span<double> out)
{
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii)
  {
    auto const    i    = static_cast<std::size_t>(ii);
    double const *arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j)
    {
      double const *brow = b.data() + j * k;
      double        s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t   p = 0;
      for (; p + 4 <= k; p += 4)
      {
        s0 += arow[p] * brow[p];
        s1 += arow[p + 1] * brow[p + 1];
        s2 += arow[p + 2] * brow[p + 2];
        s3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p)
      {
        s0 += arow[p] * brow[p];
      }
      out[i * n + j] = (s0 + s1) + (s2 + s3);
    }
  }
}

void conv2d_forward(ConvGeometry const &g, std::span<double const> input,
                    std::span<double const> weight, std::span<double const> bias,
                    std::span<double> output)
{
  std::size_t const p_n = g.out_h() * g.out_w();
  std::size_t const np  = g.batch * p_n;
  std::size_t const ckk = g.in_channels * g.kernel_h * g.kernel_w;

  std::vector<double> col;
  im2col(g, input, col);
  std::vector<double> prod(g.out_channels * np);
  matmul(g.out_channels, ckk, np, weight, col, prod);

#pragma omp parallel for schedule(static)
  for (Index q = 0; q < static_cast<Index>(g.batch * g.out_channels); ++q)
  {
    std::size_t const n   = static_cast<std::size_t>(q) / g.out_channels;
    std::size_t const k   = static_cast<std::size_t>(q) % g.out_channels;
    double const      b   = bias.empty() ? 0.0 : bias[k];
    double const     *src = prod.data() + k * np + n * p_n;
    double           *dst = output.data() + (n * g.out_channels + k) * p_n;
    for (std::size_t p = 0; p < p_n; ++p)
    {
      dst[p] = src[p] + b;
    }
  }
}

namespace {

// NCHW grad_output -> [K, N*P]
std::vector<double> channel_major(ConvGeometry const &g, std::span<double const> grad_output)
{
  std::size_t const   p_n = g.out_h() * g.out_w();
  std::size_t const   np  = g.batch * p_n;
  std::vector<double> out(g.out_channels * np);
  for (std::size_t n = 0; n < g.batch; ++n)
  {
    for (std::size_t k = 0; k < g.out_channels; ++k)
    {
      std::copy_n(grad_output.data() + (n * g.out_channels + k) * p_n, p_n,
                  out.data() + k * np + n * p_n);
    }
  }
  return out;
}

}  // namespace

void conv2d_backward_input(ConvGeometry const &g, std::span<double const> grad_output,
                           std::span<double const> weight, std::span<double> grad_input)
{
  std::size_t const np  = g.batch * g.out_h() * g.out_w();
  std::size_t const ckk = g.in_channels * g.kernel_h * g.kernel_w;

  auto const          go = channel_major(g, grad_output);
  std::vector<double> col(ckk * np);
  matmul_at_b(ckk, g.out_channels, np, weight, go, col);
  col2im(g, col, grad_input);
}

void conv2d_backward_weight(ConvGeometry const &g, std::span<double const> input,
                            std::span<double const> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias)
{
  std::size_t const np  = g.batch * g.out_h() * g.out_w();
  std::size_t const ckk = g.in_channels * g.kernel_h * g.kernel_w;

  auto const          go = channel_major(g, grad_output);
  std::vector<double> col;
  im2col(g, input, col);
  matmul_a_bt(g.out_channels, np, ckk, go, col, grad_weight);

  if (!grad_bias.empty())
  {
#pragma omp parallel for schedule(static)
    for (Index kk = 0; kk < static_cast<Index>(g.out_channels); ++kk)
    {
      auto const    k   = static_cast<std::size_t>(kk);
      double const *row = go.data() + k * np;
      double        acc = 0.0;
      for (std::size_t p = 0; p < np; ++p)
      {
        acc += row[p];
      }
      grad_bias[k] = acc;
    }
  }
}

}  // namespace parallel
}  // namespace casi::kernels
