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

#include "casi/rng.hpp"

#include <cmath>
#include <numbers>

namespace casi {

std::uint64_t splitmix64(std::uint64_t &x)
{
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z               = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z               = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k)
{
  return (x << k) | (x >> (64 - k));
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed)
  : seed_(seed)
{
  std::uint64_t sm = seed;
  for (auto &word : state_)
  {
    word = splitmix64(sm);
  }
}

std::uint64_t SeededRng::next()
{
  auto &s            = state_;
  std::uint64_t const result = rotl(s[1] * 5, 7) * 9;
  std::uint64_t const t      = s[1] << 17;

  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);

  return result;
}

double SeededRng::uniform()
{
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi)
{
  return lo + (hi - lo) * uniform();
}

std::uint64_t SeededRng::below(std::uint64_t n)
{
  // rejection keeps the distribution exactly uniform
  std::uint64_t const limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t       r;
  do
  {
    r = next();
  } while (r >= limit);
  return r % n;
}

double SeededRng::normal(double mean, double stddev)
{
  double u1 = uniform();
  while (u1 <= 0.0)
  {
    u1 = uniform();
  }
  double const u2 = uniform();
  double const r  = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace casi
