/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/features.hpp
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

#include <Eigen/Core>

#include "affect/common.hpp"

namespace affect::features {

/**
 * PCA over standardized data. Fitting subtracts the per-dimension mean,
 * divides by the per-dimension population standard deviation (floored at
 * 1e-8), and eigendecomposes the 1/(N-1) covariance of the standardized
 * samples. Components are ordered by decreasing eigenvalue, and each
 * component's largest-magnitude entry is made positive so serialized models
 * are reproducible.
 */
struct PcaModel {
    Vector mean;                      // D
    Vector scale;                     // D, per-dimension std (floored)
    Matrix components;                // D x C, orthonormal columns
    Vector explained_variance_ratio;  // C, non-increasing, each in [0, 1]

    int input_dim() const { return static_cast<int>(mean.size()); }
    int n_components() const { return static_cast<int>(components.cols()); }

    void save(const std::filesystem::path& path) const;
    static PcaModel load(const std::filesystem::path& path);
};

/// Requires N >= 2 samples and 1 <= n_components <= min(N-1, D).
PcaModel fit_pca(const Eigen::Ref<const Matrix>& data, int n_components);

/// Ratio of variance explained by each of the D principal directions
/// (sums to 1); the data behind the variance-vs-components curve.
Vector explained_variance_spectrum(const Eigen::Ref<const Matrix>& data);

Vector pca_transform(const PcaModel& model, const Eigen::Ref<const Vector>& x);
Vector pca_inverse(const PcaModel& model, const Eigen::Ref<const Vector>& z);

/// Row-wise convenience forms.
Matrix pca_transform_all(const PcaModel& model, const Eigen::Ref<const Matrix>& data);
Matrix pca_inverse_all(const PcaModel& model, const Eigen::Ref<const Matrix>& compressed);

/**
 * Per-dimension (x - median) / (q_hi - q_lo) scaling with
 * linear-interpolation quantiles. Dimensions with zero quantile range map
 * to 0.
 */
struct QuantileScaler {
    Vector median; // D
    Vector iqr;    // D, q_hi - q_lo per dimension, >= 0
};

QuantileScaler fit_quantile_scaler(const Eigen::Ref<const Matrix>& data,
                                   double q_lo = 0.25, double q_hi = 0.75);

Vector quantile_apply(const QuantileScaler& scaler, const Eigen::Ref<const Vector>& x);
Matrix quantile_apply_all(const QuantileScaler& scaler, const Eigen::Ref<const Matrix>& data);

/// Linear-interpolation quantile of one dimension's values, q in [0, 1].
double quantile(std::span<const double> values, double q);

} // namespace affect::features
