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

#include <complex>
#include <cstddef>
#include <vector>

namespace casi::fft {

using Complex = std::complex<double>;

/// Unnormalised 2-D DFT of a row-major rows x cols grid.
std::vector<Complex> forward2d(std::vector<Complex> const &in, std::size_t rows, std::size_t cols);

/// Inverse 2-D DFT scaled by 1 / (rows * cols), so inverse2d(forward2d(x)) == x.
std::vector<Complex> inverse2d(std::vector<Complex> const &in, std::size_t rows, std::size_t cols);

std::size_t next_pow2(std::size_t n);

/// Mirror index without repeating the edge sample: -1 -> 1, n -> n - 2.
std::size_t reflect_index(long i, std::size_t n);

/// Grows a rows x cols grid to out_rows x out_cols (both >= the input) by
/// mirroring; the input lands at (top, left) of the output.
std::vector<double> reflect_pad(std::vector<double> const &in, std::size_t rows, std::size_t cols,
                                std::size_t out_rows, std::size_t out_cols, std::size_t top = 0,
                                std::size_t left = 0);

}  // namespace casi::fft
