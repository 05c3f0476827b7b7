/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/face3dmm.hpp
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

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "affect/common.hpp"

namespace affect::face3dmm {

/**
 * Linear morphable model of 3D face shape: a mean shape plus identity and
 * expression bases. Shapes are stored as stacked (x, y, z) triples, so a
 * model with V vertices has 3V-dimensional shape vectors. Immutable after
 * construction; safe to share across threads.
 */
struct MorphableModel {
    Vector mean_shape;       // 3V
    Matrix identity_basis;   // 3V x K_id, unit-norm columns
    Matrix expression_basis; // 3V x K_ex, unit-norm columns

    int vertex_count() const { return static_cast<int>(mean_shape.size() / 3); }
    int identity_dim() const { return static_cast<int>(identity_basis.cols()); }
    int expression_dim() const { return static_cast<int>(expression_basis.cols()); }

    void validate() const;

    void save(const std::filesystem::path& path) const;
    static MorphableModel load(const std::filesystem::path& path);
};

struct ShapeCoefficients {
    Vector identity;   // K_id
    Vector expression; // K_ex
};

/**
 * Weak-perspective camera: the projection of a vertex v is
 * f * Pr * R * v + t, with Pr the fixed 2x3 matrix selecting the x and y
 * rows. R must be a proper rotation (orthonormal, det +1) and f positive.
 */
struct PoseParams {
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();

    void validate() const;

    /// f * Pr * R, the 2x3 matrix the camera applies to every vertex.
    Eigen::Matrix<double, 2, 3> projection_matrix() const;
};

/// mean + identity_basis * alpha_id + expression_basis * alpha_ex
Vector synthesize_shape(const MorphableModel& model, const ShapeCoefficients& coefficients);

/// Per-vertex weak-perspective projection of a 3V shape into 2V image coordinates.
Vector project(const PoseParams& pose, const Eigen::Ref<const Vector>& shape);

struct FitResult {
    ShapeCoefficients coefficients;
    double condition = 0.0; // condition estimate of the design matrix
};

/**
 * Least-squares recovery of the stacked (identity, expression) coefficients
 * from observed 2D landmarks under a known pose. Throws when the design
 * matrix is rank deficient; the condition estimate is reported either way.
 */
FitResult fit_coefficients(const MorphableModel& model,
                           const Eigen::Ref<const Vector>& observed_2d,
                           const PoseParams& pose);

struct PoseFitResult {
    PoseParams pose;
    ShapeCoefficients coefficients;
    double residual = 0.0;                 // RMS residual per coordinate
    std::vector<double> residual_history;  // one entry per iteration, non-increasing
};

/**
 * Alternates an orthographic-Procrustes pose estimate against the current
 * shape with a coefficient solve under the current pose. A pose candidate is
 * only accepted when it does not increase the residual, which makes the
 * recorded residual history monotone non-increasing.
 */
PoseFitResult fit_pose_and_coefficients(const MorphableModel& model,
                                        const Eigen::Ref<const Vector>& observed_2d,
                                        int n_iters);

/// Procrustes pose for a known shape (used internally by the alternation;
/// exposed for tests and callers that track their own shape estimate).
PoseParams estimate_pose(const Eigen::Ref<const Vector>& shape,
                         const Eigen::Ref<const Vector>& observed_2d);

/**
 * Deterministic random model: Gaussian mean shape, Gaussian bases projected
 * to a mutually orthonormal column set so identity and expression effects
 * are disentangled by construction. Requires 3V > K_id + K_ex.
 */
MorphableModel make_toy_model(std::uint64_t seed, int n_vertices, int k_id, int k_ex);

} // namespace affect::face3dmm
