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

#include <cstddef>
#include <span>

namespace casi::kernels {

/// Geometry of a plain 2D convolution over NCHW data with zero padding.
/// Weights are laid out [out_channels, in_channels, kernel_h, kernel_w].
struct ConvGeometry
{
  std::size_t batch{1};
  std::size_t in_channels{1};
  std::size_t in_h{1};
  std::size_t in_w{1};
  std::size_t out_channels{1};
  std::size_t kernel_h{1};
  std::size_t kernel_w{1};
  std::size_t stride{1};
  std::size_t pad{0};

  std::size_t out_h() const
  {
    return (in_h + 2 * pad - kernel_h) / stride + 1;
  }
  std::size_t out_w() const
  {
    return (in_w + 2 * pad - kernel_w) / stride + 1;
  }
  std::size_t input_size() const
  {
    return batch * in_channels * in_h * in_w;
  }
  std::size_t output_size() const
  {
    return batch * out_channels * out_h() * out_w();
  }
  std::size_t weight_size() const
  {
    return out_channels * in_channels * kernel_h * kernel_w;
  }
};

// Both namespaces expose the same entry points. `reference` is the
// straightforward nested-loop version kept as the test oracle; `parallel`
// lowers to im2col + GEMM and splits work across OpenMP threads. Every output
// element in `parallel` is owned by exactly one thread and summed in a fixed
// order, so results do not depend on the thread count.
//
// Backward kernels overwrite their outputs (they do not accumulate).

namespace reference {

void conv2d_forward(ConvGeometry const &g, std::span<double const> input,
                    std::span<double const> weight, std::span<double const> bias,
                    std::span<double> output);

void conv2d_backward_input(ConvGeometry const &g, std::span<double const> grad_output,
                           std::span<double const> weight, std::span<double> grad_input);

/// grad_bias may be empty.
void conv2d_backward_weight(ConvGeometry const &g, std::span<double const> input,
                            std::span<double const> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

/// out[M,N] = a[M,K] * b[K,N]
void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
            std::span<double const> b, std::span<double> out);

}  // namespace reference

namespace parallel {

void conv2d_forward(ConvGeometry const &g, std::span<double const> input,
                    std::span<double const> weight, std::span<double const> bias,
                    std::span<double> output);

void conv2d_backward_input(ConvGeometry const &g, std::span<double const> grad_output,
                           std::span<double const> weight, std::span<double> grad_input);

void conv2d_backward_weight(ConvGeometry const &g, std::span<double const> input,
                            std::span<double const> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
            std::span<double const> b, std::span<double> out);

/// out[M,N] = a[K,M]^T * b[K,N]
void matmul_at_b(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
                 std::span<double const> b, std::span<double> out);

/// out[M,N] = a[M,K] * b[N,K]^T
void matmul_a_bt(std::size_t m, std::size_t k, std::size_t n, std::span<double const> a,
                 std::span<double const> b, std::span<double> out);

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels use (1 without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace casi::kernels
