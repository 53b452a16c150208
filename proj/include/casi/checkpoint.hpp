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

#include "casi/rng.hpp"
#include "casi/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace casi {

inline constexpr char          kCheckpointMagic[8] = {'C', 'A', 'S', 'I', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion  = 1;

/// Versioned binary container for a training or classifier state.
///
/// Layout (little-endian): magic "CASICKPT", u32 version, u64 fingerprint,
/// u64 iteration, u64 rng seed, 4 x u64 rng state, u64 config length +
/// config bytes, u64 tensor count, then per tensor: u64 name length + name,
/// u64 rank, rank x u64 dims, f64 values.
struct Checkpoint
{
  std::uint64_t                              fingerprint{0};
  std::uint64_t                              iteration{0};
  std::uint64_t                              rng_seed{0};
  SeededRng::State                           rng_state{};
  std::string                                config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  /// Tensor by name; throws FormatError (Malformed) if absent.
  Tensor const &tensor(std::string const &name) const;
  bool          has(std::string const &name) const;

  bool operator==(Checkpoint const &) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(Checkpoint const &ck);

/// Throws FormatError with kind BadMagic, VersionMismatch, Truncated or
/// FingerprintMismatch (when `expected_fingerprint` is given and differs).
Checkpoint decode_checkpoint(std::span<std::uint8_t const> bytes,
                             std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

/// Atomic write (temp file + rename).
void       save_checkpoint(Checkpoint const &ck, std::filesystem::path const &path);
Checkpoint load_checkpoint(std::filesystem::path const &path,
                           std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string const &text);

}  // namespace casi
