// Copyright 2026 The skilltok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace skilltok {

// Root of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or sequence lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent model / run configuration (bad mask, incompatible checkpoints).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Index, digit or token outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Invalid caller argument (empty dataset, empty token stream, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf encountered where a finite value is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A task template that cannot be turned into demonstrations.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// File format problems. `kind` distinguishes the failure mode.
class ParseError : public Error {
 public:
  enum class Kind { kBadMagic, kTruncated, kVersionMismatch, kMalformed };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace skilltok
