/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/json_io.hpp
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

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "affect/common.hpp"

namespace affect {

using Json = nlohmann::ordered_json;

/// Row-major nested arrays, the on-disk convention for every matrix field.
inline Json matrix_to_json(const Eigen::Ref<const Matrix>& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_to_json(const Eigen::Ref<const Vector>& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
    require(j.is_array(), ErrorCode::parse, what + ": expected an array of rows");
    const auto n_rows = static_cast<Eigen::Index>(j.size());
    require(n_rows > 0, ErrorCode::parse, what + ": empty matrix");
    require(j[0].is_array(), ErrorCode::parse, what + ": rows must be arrays");
    const auto n_cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(n_rows, n_cols);
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        require(j[i].is_array() && static_cast<Eigen::Index>(j[i].size()) == n_cols,
                ErrorCode::parse, what + ": ragged rows");
        for (Eigen::Index k = 0; k < n_cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline Vector vector_from_json(const Json& j, const std::string& what) {
    require(j.is_array(), ErrorCode::parse, what + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::parse, path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

} // namespace affect
