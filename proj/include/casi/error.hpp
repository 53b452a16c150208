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

#include <stdexcept>
#include <string>

namespace casi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not compose. `axis` names the offending dimension.
class DimensionError : public Error
{
public:
  DimensionError(std::string const &what, std::string axis)
    : Error(what + " (axis: " + axis + ")")
    , axis_(std::move(axis))
  {}

  std::string const &axis() const noexcept
  {
    return axis_;
  }

private:
  std::string axis_;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Malformed on-disk data (images, manifests, checkpoints, CSV).
class FormatError : public Error
{
public:
  enum class Kind
  {
    BadMagic,
    BadMaxval,
    Truncated,
    VersionMismatch,
    FingerprintMismatch,
    Malformed,
    DuplicatePath,
    NonDenseLabels,
  };

  FormatError(Kind kind, std::string const &what)
    : Error(what)
    , kind_(kind)
  {}

  Kind kind() const noexcept
  {
    return kind_;
  }

private:
  Kind kind_;
};

}  // namespace casi
