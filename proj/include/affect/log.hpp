/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/log.hpp
 *
 * Copyright 2026 the affectlab authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>

namespace affect {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Initial level comes from AFFECTLAB_LOG={error|info|debug}; default info.
LogLevel log_level();
void set_log_level(LogLevel level);
bool log_enabled(LogLevel level);

/// Writes one line to stderr when `level` is enabled.
void log_line(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log_line(LogLevel::error, m); }
inline void log_info(const std::string& m) { log_line(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_line(LogLevel::debug, m); }

} // namespace affect
