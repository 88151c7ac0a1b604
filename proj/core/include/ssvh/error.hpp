// Copyright 2026 The ssvh Authors.
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

#ifndef SSVH_ERROR_HPP_
#define SSVH_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssvh {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration or hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Array shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Filesystem failures (open, short write, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Requested problem exceeds a supported bound (e.g. exhaustive search size).
class UnsupportedSize : public Error {
 public:
  using Error::Error;
};

// Process exit codes used by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // verification or runtime failure
inline constexpr int kExitUsage = 2;    // bad arguments or configuration
inline constexpr int kExitIo = 3;       // unreadable, unwritable or malformed files

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitUsage;
  if (dynamic_cast<const IoError*>(&e) != nullptr || dynamic_cast<const FormatError*>(&e) != nullptr) {
    return kExitIo;
  }
  return kExitFailure;
}

}  // namespace ssvh

#endif  // SSVH_ERROR_HPP_
