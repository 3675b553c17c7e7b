// Copyright 2026 The clipce Authors. All Rights Reserved.
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

#include "common/error.hpp"

namespace clipce {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kTemplate: return "template error";
    case ErrorCode::kProvider: return "provider error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kState: return "state error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kDegenerate: return "degenerate input";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

}  // namespace clipce
