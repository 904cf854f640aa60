// Copyright 2026 The shift-hpo Authors
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

#ifndef SHIFTHPO_LOG_HPP
#define SHIFTHPO_LOG_HPP

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace shifthpo {

enum class log_level { error = 0, info = 1, debug = 2 };

/// Verbosity from SHIFT_HPO_LOG in {error, info, debug}; defaults to error.
inline log_level current_log_level() {
  static const log_level level = [] {
    const char* env = std::getenv("SHIFT_HPO_LOG");
    if (env == nullptr) return log_level::error;
    const std::string v(env);
    if (v == "debug") return log_level::debug;
    if (v == "info") return log_level::info;
    return log_level::error;
  }();
  return level;
}

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

template <typename... Args>
void log_at(log_level lvl, const char* tag, Args&&... args) {
  if (static_cast<int>(current_log_level()) < static_cast<int>(lvl)) return;
  std::ostringstream oss;
  oss << "[shift-hpo " << tag << "] ";
  (oss << ... << std::forward<Args>(args));
  std::lock_guard<std::mutex> lock(log_mutex());
  std::cerr << oss.str() << '\n';
}
}  // namespace detail

template <typename... Args>
void log_error(Args&&... args) {
  detail::log_at(log_level::error, "error", std::forward<Args>(args)...);
}

template <typename... Args>
void log_info(Args&&... args) {
  detail::log_at(log_level::info, "info", std::forward<Args>(args)...);
}

template <typename... Args>
void log_debug(Args&&... args) {
  detail::log_at(log_level::debug, "debug", std::forward<Args>(args)...);
}

}  // namespace shifthpo

#endif  // SHIFTHPO_LOG_HPP
