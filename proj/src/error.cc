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

#include "dsqueeze/error.h"

namespace dsqueeze {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch:
      return "dimension mismatch";
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kNonFinite:
      return "non-finite value";
    case ErrorCode::kMalformedMessage:
      return "malformed message";
    case ErrorCode::kConfig:
      return "config error";
    case ErrorCode::kIncompleteTrajectory:
      return "incomplete trajectory";
    case ErrorCode::kIo:
      return "io error";
  }
  return "unknown error";
}

}  // namespace dsqueeze
