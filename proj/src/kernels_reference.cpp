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

namespace casi::kernels::reference {

namespace {

// index of the input pixel read by output (oh, ow) through kernel tap (i, j);
// returns false for taps that land in the zero padding
bool tap(ConvGeometry const &g, std::size_t oh, std::size_t ow, std::size_t i, std::size_t j,
         std::size_t &ih, std::size_t &iw)
{
  auto const y = static_cast<long>(oh * g.stride + i) - static_cast<long>(g.pad);
  auto const x = static_cast<long>(ow * g.stride + j) - static_cast<long>(g.pad);
  if (y < 0 || x < 0 || y >= static_cast<long>(g.in_h) || x >= static_cast<long>(g.in_w))
  {
    return false;
  }
  ih = static_cast<std::size_t>(y);
  iw = static_cast<std::size_t>(x);
  return true;
}

}  // namespace

void conv2d_forward(ConvGeometry const &g, std::span<double const> input,
                    std::span<double const> weight, std::span<double const> bias,
                    std::span<double> output)
{
  std::size_t const oh_n = g.out_h();
  std::size_t const ow_n = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
  {
    for (std::size_t k = 0; k < g.out_channels; ++k)
    {
      for (std::size_t oh = 0; oh < oh_n; ++oh)
      {
        for (std::size_t ow = 0; ow < ow_n; ++ow)
        {
          double acc = bias.empty() ? 0.0 : bias[k];
          for (std::size_t c = 0; c < g.in_channels; ++c)
          {
            for (std::size_t i = 0; i < g.kernel_h; ++i)
            {
              for (std::size_t j = 0; j < g.kernel_w; ++j)
              {
                std::size_t ih, iw;
                if (!tap(g, oh, ow, i, j, ih, iw))
                {
                  continue;
                }
                acc += weight[((k * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j] *
                       input[((n * g.in_channels + c) * g.in_h + ih) * g.in_w + iw];
              }
            }
          }
          output[((n * g.out_channels + k) * oh_n + oh) * ow_n + ow] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(ConvGeometry const &g, std::span<double const> grad_output,
                           std::span<double const> weight, std::span<double> grad_input)
{
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  std::size_t const oh_n = g.out_h();
  std::size_t const ow_n = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
  {
    for (std::size_t k = 0; k < g.out_channels; ++k)
    {
      for (std::size_t oh = 0; oh < oh_n; ++oh)
      {
        for (std::size_t ow = 0; ow < ow_n; ++ow)
        {
          double const go = grad_output[((n * g.out_channels + k) * oh_n + oh) * ow_n + ow];
          for (std::size_t c = 0; c < g.in_channels; ++c)
          {
            for (std::size_t i = 0; i < g.kernel_h; ++i)
            {
              for (std::size_t j = 0; j < g.kernel_w; ++j)
              {
                std::size_t ih, iw;
                if (!tap(g, oh, ow, i, j, ih, iw))
                {
                  continue;
                }
                grad_input[((n * g.in_channels + c) * g.in_h + ih) * g.in_w + iw] +=
                    go * weight[((k * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(ConvGeometry const &g, std::span<double const> input,
                            std::span<double const> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias)
{
  std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  std::size_t const oh_n = g.out_h();
  std::size_t const ow_n = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
  {
    for (std::size_t k = 0; k < g.out_channels; ++k)
    {
      for (std::size_t oh = 0; oh < oh_n; ++oh)
      {
        for (std::size_t ow = 0; ow < ow_n; ++ow)
        {
          double const go = grad_output[((n * g.out_channels + k) * oh_n + oh) * ow_n + ow];
          if (!grad_bias.empty())
          {
            grad_bias[k] += go;
          }
          for (std::size_t c = 0; c < g.in_channels; ++c)
          {
            for (std::size_t i = 0; i < g.kernel_h; ++i)
            {
              for (std::size_t j = 0; j < g.kernel_w; ++j)
              {
                std::size_t ih, iw;
                if (!tap(g, oh, ow, i, j, ih, iw))
                {
                  continue;
                }
                grad_weight[((k * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j] +=
                    go * input[((n * g.in_channels + c) * g.in_h + ih) * g.in_w + iw];
              }
            }
          }
        }
      }
    }
  }
}

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
            std::span<double const> b, std::span<double> out)
{
  for (std::size_t i = 0; i < m; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p)
      {
        acc += a[i * k + p] * b[p * n + j];
      }
      out[i * n + j] = acc;
    }
  }
}

}  // namespace casi::kernels::reference
