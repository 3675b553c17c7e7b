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

#include "common/log.hpp"

#include <iostream>
#include <mutex>

namespace clipce {

namespace {

std::mutex g_mutex;
std::vector<std::string> g_warnings;
bool g_quiet = false;

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_warnings.push_back(message);
  if (!g_quiet) std::cerr << "warning: " << message << '\n';
}

void info(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (!g_quiet) std::cerr << message << '\n';
}

std::vector<std::string> take_warnings() {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::vector<std::string> out;
  out.swap(g_warnings);
  return out;
}

void set_log_quiet(bool quiet) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_quiet = quiet;
}

}  // namespace clipce
