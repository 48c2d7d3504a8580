// Copyright 2026 The scene-robust Authors.
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

namespace scene_robust {

// Error categories. The CLI maps these onto exit codes: InputError,
// FormatError and ConfigError are data errors (2), NumericError is a numeric
// failure (3).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (missing severity row, bad flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a precondition (degenerate image, unlabeled record).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file does not match its declared binary or text format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an API contract (shape mismatch, index out of range).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or activations.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A metric whose denominator vanishes.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Raised by build_graph when preprocessing leaves no valid words.
class EmptyCaptionError : public InputError {
 public:
  using InputError::InputError;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

}  // namespace scene_robust
