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

#pragma once

#include <string>
#include <vector>

namespace clipce {

// Warning channel. Messages go to stderr (unless muted) and are retained so
// callers and tests can inspect what was flagged during an operation.
void warn(const std::string& message);
void info(const std::string& message);

std::vector<std::string> take_warnings();
void set_log_quiet(bool quiet);

inline constexpr const char* kToolVersion = "0.3.0";

}  // namespace clipce
