// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
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

#ifndef SAGRNN_ERRORS_HPP_
#define SAGRNN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sagrnn {

// Shape/extent violations (wrong inner dimension, rank, axis).
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse (non-scalar backward root, factorial guard, ...).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed files: bad magic, truncation, checksum mismatch.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A cue estimate could not be formed (e.g. silent signal).
class UndefinedCueError : public std::runtime_error {
 public:
  explicit UndefinedCueError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace sagrnn

#endif  // SAGRNN_ERRORS_HPP_
