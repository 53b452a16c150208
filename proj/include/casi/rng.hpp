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

#include <array>
#include <cstdint>

namespace casi {

/// xoshiro256** seeded through splitmix64. The output stream depends only on
/// the seed, so runs reproduce across platforms and compilers.
class SeededRng
{
public:
  using State = std::array<std::uint64_t, 4>;

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller; no cached second variate, so the state
  /// alone determines the stream.
  double normal(double mean = 0.0, double stddev = 1.0);

  std::uint64_t seed() const noexcept
  {
    return seed_;
  }
  State const &state() const noexcept
  {
    return state_;
  }
  void set_state(State const &state) noexcept
  {
    state_ = state;
  }

  bool operator==(SeededRng const &other) const = default;

private:
  std::uint64_t seed_;
  State         state_{};
};

std::uint64_t splitmix64(std::uint64_t &x);

}  // namespace casi
