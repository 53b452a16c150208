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

#include "casi/error.hpp"

#include <fftw3.h>

#include <mutex>

namespace casi::fft {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex &planner_mutex()
{
  static std::mutex m;
  return m;
}

std::vector<Complex> transform(std::vector<Complex> const &in, std::size_t rows, std::size_t cols,
                               int sign)
{
  if (in.size() != rows * cols || rows == 0 || cols == 0)
  {
    throw ContractError("fft: buffer does not match grid size");
  }
  std::vector<Complex> out(in.size());
  std::vector<Complex> work(in);
  auto *src = reinterpret_cast<fftw_complex *>(work.data());
  auto *dst = reinterpret_cast<fftw_complex *>(out.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), src, dst, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

std::vector<Complex> forward2d(std::vector<Complex> const &in, std::size_t rows, std::size_t cols)
{
  return transform(in, rows, cols, FFTW_FORWARD);
}

std::vector<Complex> inverse2d(std::vector<Complex> const &in, std::size_t rows, std::size_t cols)
{
  auto         out   = transform(in, rows, cols, FFTW_BACKWARD);
  double const scale = 1.0 / static_cast<double>(rows * cols);
  for (auto &v : out)
  {
    v *= scale;
  }
  return out;
}

std::size_t next_pow2(std::size_t n)
{
  std::size_t p = 1;
  while (p < n)
  {
    p <<= 1;
  }
  return p;
}

std::size_t reflect_index(long i, std::size_t n)
{
  if (n == 1)
  {
    return 0;
  }
  long const period = 2 * (static_cast<long>(n) - 1);
  long       r      = i % period;
  if (r < 0)
  {
    r += period;
  }
  return static_cast<std::size_t>(r < static_cast<long>(n) ? r : period - r);
}

std::vector<double> reflect_pad(std::vector<double> const &in, std::size_t rows, std::size_t cols,
                                std::size_t out_rows, std::size_t out_cols, std::size_t top,
                                std::size_t left)
{
  if (out_rows < rows || out_cols < cols || in.size() != rows * cols)
  {
    throw ContractError("reflect_pad: output smaller than input");
  }
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t y = 0; y < out_rows; ++y)
  {
    std::size_t const sy = reflect_index(static_cast<long>(y) - static_cast<long>(top), rows);
    for (std::size_t x = 0; x < out_cols; ++x)
    {
      out[y * out_cols + x] = in[sy * cols + reflect_index(static_cast<long>(x) - static_cast<long>(left), cols)];
    }
  }
  return out;
}

}  // namespace casi::fft
