/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/features.cpp
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
#include "affect/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "affect/json_io.hpp"

namespace affect::features {

namespace {

constexpr double kScaleFloor = 1e-8;

struct Standardized {
    Vector mean;
    Vector scale;
    Matrix data; // N x D
};

Standardized standardize(const Eigen::Ref<const Matrix>& data) {
    const auto n = data.rows();
    Standardized s;
    s.mean = data.colwise().mean();
    Matrix centered = data.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().sum() / static_cast<double>(n))
                  .sqrt()
                  .max(kScaleFloor)
                  .matrix()
                  .transpose();
    s.data = centered.array().rowwise() / s.scale.transpose().array();
    return s;
}

/// Eigenpairs of the 1/(N-1) covariance, sorted by decreasing eigenvalue
/// with the deterministic sign convention applied.
std::pair<Vector, Matrix> covariance_eigen(const Matrix& standardized) {
    const auto n = standardized.rows();
    const Matrix covariance =
        standardized.transpose() * standardized / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
    require(solver.info() == Eigen::Success, ErrorCode::numeric,
            "fit_pca: eigendecomposition failed");

    const auto d = covariance.rows();
    std::vector<Eigen::Index> order(d);
    for (Eigen::Index i = 0; i < d; ++i) order[i] = i;
    const Vector& raw_values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return raw_values(a) > raw_values(b); });

    Vector values(d);
    Matrix vectors(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        values(i) = std::max(raw_values(order[i]), 0.0);
        vectors.col(i) = solver.eigenvectors().col(order[i]);
        Eigen::Index max_row = 0;
        vectors.col(i).cwiseAbs().maxCoeff(&max_row);
        if (vectors(max_row, i) < 0.0) vectors.col(i) = -vectors.col(i);
    }
    return {values, vectors};
}

void check_data(const Eigen::Ref<const Matrix>& data, const char* op) {
    require(data.rows() >= 2, ErrorCode::invalid_argument,
            std::string(op) + ": needs at least 2 samples");
    require(data.cols() >= 1, ErrorCode::invalid_argument,
            std::string(op) + ": needs at least 1 dimension");
    require_finite(data, std::string(op) + " data");
}

} // namespace

PcaModel fit_pca(const Eigen::Ref<const Matrix>& data, int n_components) {
    check_data(data, "fit_pca");
    const auto n = data.rows();
    const auto d = data.cols();
    require(n_components >= 1 &&
                n_components <= std::min<Eigen::Index>(n - 1, d),
            ErrorCode::invalid_argument,
            "fit_pca: n_components must lie in [1, min(N-1, D)]");

    Standardized s = standardize(data);
    auto [values, vectors] = covariance_eigen(s.data);
    const double total = values.sum();

    PcaModel model;
    model.mean = std::move(s.mean);
    model.scale = std::move(s.scale);
    model.components = vectors.leftCols(n_components);
    model.explained_variance_ratio =
        total > 0.0 ? Vector(values.head(n_components) / total)
                    : Vector(Vector::Zero(n_components));
    return model;
}

Vector explained_variance_spectrum(const Eigen::Ref<const Matrix>& data) {
    check_data(data, "explained_variance_spectrum");
    Standardized s = standardize(data);
    auto [values, vectors] = covariance_eigen(s.data);
    const double total = values.sum();
    if (total <= 0.0) return Vector::Zero(values.size());
    return values / total;
}

Vector pca_transform(const PcaModel& model, const Eigen::Ref<const Vector>& x) {
    require(x.size() == model.mean.size(), ErrorCode::dimension_mismatch,
            "pca_transform: input dimension mismatch");
    const Vector standardized = (x - model.mean).cwiseQuotient(model.scale);
    return model.components.transpose() * standardized;
}

Vector pca_inverse(const PcaModel& model, const Eigen::Ref<const Vector>& z) {
    require(z.size() == model.components.cols(), ErrorCode::dimension_mismatch,
            "pca_inverse: input dimension mismatch");
    return model.mean + (model.components * z).cwiseProduct(model.scale);
}

Matrix pca_transform_all(const PcaModel& model, const Eigen::Ref<const Matrix>& data) {
    require(data.cols() == model.mean.size(), ErrorCode::dimension_mismatch,
            "pca_transform_all: input dimension mismatch");
    const Matrix standardized =
        (data.rowwise() - model.mean.transpose()).array().rowwise() /
        model.scale.transpose().array();
    return standardized * model.components;
}

Matrix pca_inverse_all(const PcaModel& model, const Eigen::Ref<const Matrix>& compressed) {
    require(compressed.cols() == model.components.cols(), ErrorCode::dimension_mismatch,
            "pca_inverse_all: input dimension mismatch");
    Matrix raw = compressed * model.components.transpose();
    raw = raw.array().rowwise() * model.scale.transpose().array();
    return raw.rowwise() + model.mean.transpose();
}

double quantile(std::span<const double> values, double q) {
    require(!values.empty(), ErrorCode::invalid_argument, "quantile: empty data");
    require(q >= 0.0 && q <= 1.0, ErrorCode::invalid_argument, "quantile: q outside [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double position = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(position));
    const auto hi = static_cast<std::size_t>(std::ceil(position));
    const double frac = position - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

QuantileScaler fit_quantile_scaler(const Eigen::Ref<const Matrix>& data,
                                   double q_lo, double q_hi) {
    require(data.rows() >= 1 && data.cols() >= 1, ErrorCode::invalid_argument,
            "fit_quantile_scaler: empty data");
    require_finite(data, "fit_quantile_scaler data");
    require(q_lo >= 0.0 && q_lo < q_hi && q_hi <= 1.0, ErrorCode::invalid_argument,
            "fit_quantile_scaler: requires 0 <= q_lo < q_hi <= 1");

    const auto d = data.cols();
    QuantileScaler scaler;
    scaler.median = Vector(d);
    scaler.iqr = Vector(d);
    std::vector<double> column(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            column[static_cast<std::size_t>(i)] = data(i, j);
        scaler.median(j) = quantile(column, 0.5);
        scaler.iqr(j) = quantile(column, q_hi) - quantile(column, q_lo);
    }
    return scaler;
}

Vector quantile_apply(const QuantileScaler& scaler, const Eigen::Ref<const Vector>& x) {
    require(x.size() == scaler.median.size(), ErrorCode::dimension_mismatch,
            "quantile_apply: input dimension mismatch");
    Vector out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        out(j) = scaler.iqr(j) == 0.0 ? 0.0 : (x(j) - scaler.median(j)) / scaler.iqr(j);
    }
    return out;
}

Matrix quantile_apply_all(const QuantileScaler& scaler, const Eigen::Ref<const Matrix>& data) {
    Matrix out(data.rows(), data.cols());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out.row(i) = quantile_apply(scaler, data.row(i).transpose()).transpose();
    }
    return out;
}

void PcaModel::save(const std::filesystem::path& path) const {
    Json j;
    j["D"] = input_dim();
    j["C"] = n_components();
    j["mean"] = vector_to_json(mean);
    j["scale"] = vector_to_json(scale);
    j["components"] = matrix_to_json(components);
    j["explained_variance_ratio"] = vector_to_json(explained_variance_ratio);
    write_json_file(path, j);
}

PcaModel PcaModel::load(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    PcaModel model;
    model.mean = vector_from_json(j.at("mean"), "mean");
    model.scale = vector_from_json(j.at("scale"), "scale");
    model.components = matrix_from_json(j.at("components"), "components");
    model.explained_variance_ratio =
        vector_from_json(j.at("explained_variance_ratio"), "explained_variance_ratio");
    require(model.components.rows() == model.mean.size(), ErrorCode::parse,
            path.string() + ": components row count disagrees with mean");
    require(model.explained_variance_ratio.size() == model.components.cols(), ErrorCode::parse,
            path.string() + ": ratio count disagrees with component count");
    return model;
}

} // namespace affect::features
