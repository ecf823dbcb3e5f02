// Copyright 2026 The Ember Authors
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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ember {

enum class ErrorCode {
  kSyntax,
  kPlan,
  kTypeMismatch,
  kSchemaViolation,
  kCorruptChunk,
  kSourceUnavailable,
  kUnrecoverable,
  kScratchIo,
  kFieldNotFound,
  kDimensionMismatch,
  kInvalidK,
  kInvalidArgument,
  kNotFound,
  kCycleDetected,
  kCancelled,
  kIo,
  kInternal,
};

const char* error_code_name(ErrorCode code);

// All engine failures surface as an Error. `offset` is a byte offset into the
// statement text for parse and bind errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<size_t> offset = std::nullopt)
      : std::runtime_error(message), code_(code), offset_(offset) {}

  ErrorCode code() const { return code_; }
  const std::optional<size_t>& offset() const { return offset_; }

 private:
  ErrorCode code_;
  std::optional<size_t> offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::optional<size_t> offset = std::nullopt) {
  throw Error(code, message, offset);
}

}  // namespace ember
