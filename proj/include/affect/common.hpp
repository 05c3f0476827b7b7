/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/common.hpp
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

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace affect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error categories; mirrored one-to-one by the C API status codes.
enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    numeric,
    io,
    parse,
    internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) raise(code, message);
}

inline void require_finite(std::span<const double> values, const std::string& what) {
    for (double v : values) {
        if (!std::isfinite(v)) raise(ErrorCode::invalid_argument, what + ": non-finite value");
    }
}

inline void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
    if (!m.allFinite()) raise(ErrorCode::invalid_argument, what + ": non-finite value");
}

inline const char* version_string() { return "affectlab 0.1.0"; }

} // namespace affect
