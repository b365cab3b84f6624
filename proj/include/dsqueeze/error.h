// Copyright 2026 The dsqueeze Authors. All Rights Reserved.
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
// =============================================================================

#ifndef DSQUEEZE_ERROR_H_
#define DSQUEEZE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dsqueeze {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kNonFinite,
  kMalformedMessage,
  kConfig,
  kIncompleteTrajectory,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so
// callers (the CLI in particular) can map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the config parser; carries the offending field path and the
// 1-based source line (0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& message)
      : Error(ErrorCode::kConfig, Format(field, line, message)),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string Format(const std::string& field, int line,
                            const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  std::string field_;
  int line_;
};

}  // namespace dsqueeze

#endif  // DSQUEEZE_ERROR_H_
