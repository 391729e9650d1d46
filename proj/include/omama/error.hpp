// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace omama {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input bytes are not a recognized container (bad magic, version, enum).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input stream ended before the declared content.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Structurally readable data whose content is inconsistent (e.g. RLE rows).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A mask has no foreground pixels where one is required.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

/// Token count exceeds the positional-embedding capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An object was used before a required field was filled.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A training/evaluation sample cannot be used and must be skipped.
class SampleError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or override is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace omama
