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

#include "casi/checkpoint.hpp"

#include "casi/image.hpp"

#include <bit>
#include <cstring>

namespace casi {

Tensor const &Checkpoint::tensor(std::string const &name) const
{
  for (auto const &[n, t] : tensors)
  {
    if (n == name)
    {
      return t;
    }
  }
  throw FormatError(FormatError::Kind::Malformed, "checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(std::string const &name) const
{
  for (auto const &entry : tensors)
  {
    if (entry.first == name)
    {
      return true;
    }
  }
  return false;
}

namespace {

class Writer
{
public:
  void bytes(void const *p, std::size_t n)
  {
    auto const *b = static_cast<std::uint8_t const *>(p);
    out_.insert(out_.end(), b, b + n);
  }

  template <typename T>
  void le(T v)
  {
    for (std::size_t i = 0; i < sizeof(T); ++i)
    {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  void u64(std::uint64_t v)
  {
    le(v);
  }
  void f64(double v)
  {
    le(std::bit_cast<std::uint64_t>(v));
  }
  void text(std::string const &s)
  {
    u64(s.size());
    bytes(s.data(), s.size());
  }

  std::vector<std::uint8_t> take()
  {
    return std::move(out_);
  }

private:
  std::vector<std::uint8_t> out_;
};

class Reader
{
public:
  explicit Reader(std::span<std::uint8_t const> in)
    : in_(in)
  {}

  void need(std::size_t n, char const *what) const
  {
    if (in_.size() - pos_ < n)
    {
      throw FormatError(FormatError::Kind::Truncated, std::string("checkpoint truncated while reading ") + what);
    }
  }

  template <typename T>
  T le(char const *what)
  {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
    {
      v |= static_cast<T>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::uint64_t u64(char const *what)
  {
    return le<std::uint64_t>(what);
  }

  std::string text(char const *what)
  {
    std::uint64_t const n = u64(what);
    need(n, what);
    std::string s(reinterpret_cast<char const *>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<std::uint8_t const> raw(std::size_t n, char const *what)
  {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const
  {
    return pos_ == in_.size();
  }

private:
  std::span<std::uint8_t const> in_;
  std::size_t                   pos_{0};
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(Checkpoint const &ck)
{
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.le(kCheckpointVersion);
  w.u64(ck.fingerprint);
  w.u64(ck.iteration);
  w.u64(ck.rng_seed);
  for (auto s : ck.rng_state)
  {
    w.u64(s);
  }
  w.text(ck.config);
  w.u64(ck.tensors.size());
  for (auto const &[name, t] : ck.tensors)
  {
    w.text(name);
    w.u64(t.ndim());
    for (auto d : t.shape())
    {
      w.u64(d);
    }
    for (double v : t.data())
    {
      w.f64(v);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<std::uint8_t const> bytes,
                             std::optional<std::uint64_t> expected_fingerprint)
{
  if (bytes.size() < sizeof kCheckpointMagic ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
  {
    throw FormatError(FormatError::Kind::BadMagic, "not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.raw(sizeof kCheckpointMagic, "magic");
  auto const version = r.le<std::uint32_t>("version");
  if (version != kCheckpointVersion)
  {
    throw FormatError(FormatError::Kind::VersionMismatch,
                      "checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ck.fingerprint = r.u64("fingerprint");
  if (expected_fingerprint && *expected_fingerprint != ck.fingerprint)
  {
    throw FormatError(FormatError::Kind::FingerprintMismatch,
                      "checkpoint was written for a different configuration");
  }
  ck.iteration = r.u64("iteration");
  ck.rng_seed  = r.u64("rng seed");
  for (auto &s : ck.rng_state)
  {
    s = r.u64("rng state");
  }
  ck.config                 = r.text("config");
  std::uint64_t const count = r.u64("tensor count");
  for (std::uint64_t i = 0; i < count; ++i)
  {
    std::string         name = r.text("tensor name");
    std::uint64_t const rank = r.u64("tensor rank");
    if (rank > 8)
    {
      throw FormatError(FormatError::Kind::Malformed, "tensor '" + name + "' has implausible rank");
    }
    Shape shape;
    for (std::uint64_t d = 0; d < rank; ++d)
    {
      shape.push_back(r.u64("tensor dims"));
    }
    std::size_t n = 1;
    for (auto d : shape)
    {
      if (d == 0 || n > (std::size_t{1} << 40) / d)
      {
        throw FormatError(FormatError::Kind::Malformed, "tensor '" + name + "' has invalid dims");
      }
      n *= d;
    }
    auto const          raw = r.raw(n * 8, "tensor data");
    std::vector<double> data(n);
    for (std::size_t k = 0; k < n; ++k)
    {
      std::uint64_t bits = 0;
      for (std::size_t b = 0; b < 8; ++b)
      {
        bits |= static_cast<std::uint64_t>(raw[k * 8 + b]) << (8 * b);
      }
      data[k] = std::bit_cast<double>(bits);
    }
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done())
  {
    throw FormatError(FormatError::Kind::Malformed, "trailing bytes after checkpoint payload");
  }
  return ck;
}

void save_checkpoint(Checkpoint const &ck, std::filesystem::path const &path)
{
  auto const bytes = encode_checkpoint(ck);
  write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(std::filesystem::path const &path, std::optional<std::uint64_t> expected_fingerprint)
{
  auto const bytes = read_file(path);
  return decode_checkpoint(bytes, expected_fingerprint);
}

std::uint64_t fnv1a64(std::string const &text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace casi
