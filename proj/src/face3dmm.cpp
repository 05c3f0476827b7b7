/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/face3dmm.cpp
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
#include "affect/face3dmm.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "affect/json_io.hpp"
#include "affect/rng.hpp"

namespace affect::face3dmm {

namespace {

constexpr double kOrthonormalTol = 1e-10;

} // namespace

void MorphableModel::validate() const {
    const auto dim = mean_shape.size();
    require(dim > 0 && dim % 3 == 0, ErrorCode::invalid_argument,
            "MorphableModel: mean shape length must be a positive multiple of 3");
    require(identity_basis.rows() == dim && expression_basis.rows() == dim,
            ErrorCode::dimension_mismatch, "MorphableModel: basis row count mismatch");
    require(identity_basis.cols() >= 1 && expression_basis.cols() >= 1,
            ErrorCode::invalid_argument, "MorphableModel: bases need at least one column");
    require(dim > identity_basis.cols() + expression_basis.cols(),
            ErrorCode::invalid_argument,
            "MorphableModel: 3V must exceed K_id + K_ex");
    for (Eigen::Index k = 0; k < identity_basis.cols(); ++k) {
        require(std::abs(identity_basis.col(k).norm() - 1.0) < 1e-8, ErrorCode::invalid_argument,
                "MorphableModel: identity basis column " + std::to_string(k) + " not unit norm");
    }
    for (Eigen::Index k = 0; k < expression_basis.cols(); ++k) {
        require(std::abs(expression_basis.col(k).norm() - 1.0) < 1e-8, ErrorCode::invalid_argument,
                "MorphableModel: expression basis column " + std::to_string(k) + " not unit norm");
    }
}

void PoseParams::validate() const {
    require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_argument,
            "PoseParams: scale must be positive");
    require(translation.allFinite(), ErrorCode::invalid_argument,
            "PoseParams: non-finite translation");
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    require((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < kOrthonormalTol,
            ErrorCode::invalid_argument, "PoseParams: rotation is not orthonormal");
    require(rotation.determinant() > 0.0, ErrorCode::invalid_argument,
            "PoseParams: rotation determinant must be +1");
}

Eigen::Matrix<double, 2, 3> PoseParams::projection_matrix() const {
    return scale * rotation.topRows<2>();
}

Vector synthesize_shape(const MorphableModel& model, const ShapeCoefficients& coefficients) {
    require(coefficients.identity.size() == model.identity_basis.cols(),
            ErrorCode::dimension_mismatch, "synthesize_shape: identity coefficient size mismatch");
    require(coefficients.expression.size() == model.expression_basis.cols(),
            ErrorCode::dimension_mismatch, "synthesize_shape: expression coefficient size mismatch");
    return model.mean_shape + model.identity_basis * coefficients.identity +
           model.expression_basis * coefficients.expression;
}

Vector project(const PoseParams& pose, const Eigen::Ref<const Vector>& shape) {
    pose.validate();
    require(shape.size() % 3 == 0, ErrorCode::dimension_mismatch,
            "project: shape length must be a multiple of 3");
    const auto n_vertices = shape.size() / 3;
    const Eigen::Matrix<double, 2, 3> camera = pose.projection_matrix();
    Vector out(2 * n_vertices);
    for (Eigen::Index v = 0; v < n_vertices; ++v) {
        out.segment<2>(2 * v) = camera * shape.segment<3>(3 * v) + pose.translation;
    }
    return out;
}

FitResult fit_coefficients(const MorphableModel& model,
                           const Eigen::Ref<const Vector>& observed_2d,
                           const PoseParams& pose) {
    pose.validate();
    const int n_vertices = model.vertex_count();
    require(observed_2d.size() == 2 * n_vertices, ErrorCode::dimension_mismatch,
            "fit_coefficients: observed landmarks size mismatch");
    const Eigen::Index k_id = model.identity_basis.cols();
    const Eigen::Index k_ex = model.expression_basis.cols();
    const Eigen::Index k = k_id + k_ex;
    require(2 * n_vertices >= k, ErrorCode::invalid_argument,
            "fit_coefficients: fewer observations than unknowns");

    const Eigen::Matrix<double, 2, 3> camera = pose.projection_matrix();
    Matrix design(2 * n_vertices, k);
    Vector rhs(2 * n_vertices);
    for (Eigen::Index v = 0; v < n_vertices; ++v) {
        design.middleRows<2>(2 * v).leftCols(k_id) =
            camera * model.identity_basis.middleRows<3>(3 * v);
        design.middleRows<2>(2 * v).rightCols(k_ex) =
            camera * model.expression_basis.middleRows<3>(3 * v);
        rhs.segment<2>(2 * v) = observed_2d.segment<2>(2 * v) -
                                camera * model.mean_shape.segment<3>(3 * v) -
                                pose.translation;
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    const Matrix r_factor = qr.matrixR();
    const double r_head = std::abs(r_factor(0, 0));
    const double r_tail = std::abs(r_factor(k - 1, k - 1));
    const double condition = r_tail > 0.0 ? r_head / r_tail
                                          : std::numeric_limits<double>::infinity();
    if (qr.rank() < k || condition > 1e12) {
        raise(ErrorCode::numeric,
              "fit_coefficients: rank-deficient design matrix (condition estimate " +
                  std::to_string(condition) + ")");
    }

    const Vector alpha = qr.solve(rhs);
    FitResult result;
    result.coefficients.identity = alpha.head(k_id);
    result.coefficients.expression = alpha.tail(k_ex);
    result.condition = condition;
    return result;
}

PoseParams estimate_pose(const Eigen::Ref<const Vector>& shape,
                         const Eigen::Ref<const Vector>& observed_2d) {
    require(shape.size() % 3 == 0, ErrorCode::dimension_mismatch,
            "estimate_pose: shape length must be a multiple of 3");
    const Eigen::Index n_vertices = shape.size() / 3;
    require(observed_2d.size() == 2 * n_vertices, ErrorCode::dimension_mismatch,
            "estimate_pose: observed landmarks size mismatch");
    require(n_vertices >= 3, ErrorCode::invalid_argument,
            "estimate_pose: needs at least 3 vertices");

    Matrix points3(n_vertices, 3);
    Matrix points2(n_vertices, 2);
    for (Eigen::Index v = 0; v < n_vertices; ++v) {
        points3.row(v) = shape.segment<3>(3 * v).transpose();
        points2.row(v) = observed_2d.segment<2>(2 * v).transpose();
    }
    const Eigen::RowVector3d centroid3 = points3.colwise().mean();
    const Eigen::RowVector2d centroid2 = points2.colwise().mean();
    const Matrix centered3 = points3.rowwise() - centroid3;
    const Matrix centered2 = points2.rowwise() - centroid2;

    // Unconstrained 2x3 camera from least squares, then the nearest
    // scaled-row-orthonormal matrix via SVD. Scale is the mean singular value.
    const Matrix camera_t = centered3.colPivHouseholderQr().solve(centered2); // 3x2
    Eigen::Matrix<double, 2, 3> camera = camera_t.transpose();

    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(
        camera, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d singulars = svd.singularValues();
    require(singulars(1) > 1e-12 * std::max(1.0, singulars(0)), ErrorCode::numeric,
            "estimate_pose: degenerate vertex configuration (rank < 2 in the plane)");

    const Eigen::Matrix<double, 2, 3> ortho =
        svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
    const Eigen::Vector3d row0 = ortho.row(0).transpose();
    const Eigen::Vector3d row1 = ortho.row(1).transpose();
    PoseParams pose;
    pose.scale = 0.5 * (singulars(0) + singulars(1));
    pose.rotation.row(0) = row0.transpose();
    pose.rotation.row(1) = row1.transpose();
    pose.rotation.row(2) = row0.cross(row1).transpose(); // completes det +1
    pose.translation =
        centroid2.transpose() - pose.scale * pose.rotation.topRows<2>() * centroid3.transpose();
    pose.validate();
    return pose;
}

namespace {

double rms_residual(const MorphableModel& model, const PoseParams& pose,
                    const ShapeCoefficients& coefficients,
                    const Eigen::Ref<const Vector>& observed_2d) {
    const Vector predicted = project(pose, synthesize_shape(model, coefficients));
    return std::sqrt((predicted - observed_2d).squaredNorm() /
                     static_cast<double>(observed_2d.size()));
}

} // namespace

PoseFitResult fit_pose_and_coefficients(const MorphableModel& model,
                                        const Eigen::Ref<const Vector>& observed_2d,
                                        int n_iters) {
    require(n_iters >= 1, ErrorCode::invalid_argument,
            "fit_pose_and_coefficients: n_iters must be >= 1");
    require(observed_2d.size() == 2 * model.vertex_count(), ErrorCode::dimension_mismatch,
            "fit_pose_and_coefficients: observed landmarks size mismatch");

    PoseFitResult state;
    state.coefficients.identity = Vector::Zero(model.identity_dim());
    state.coefficients.expression = Vector::Zero(model.expression_dim());
    state.pose = estimate_pose(model.mean_shape, observed_2d);
    state.residual = rms_residual(model, state.pose, state.coefficients, observed_2d);

    for (int iter = 0; iter < n_iters; ++iter) {
        const Vector current_shape = synthesize_shape(model, state.coefficients);
        const PoseParams candidate = estimate_pose(current_shape, observed_2d);
        if (rms_residual(model, candidate, state.coefficients, observed_2d) <= state.residual) {
            state.pose = candidate;
        }
        state.coefficients = fit_coefficients(model, observed_2d, state.pose).coefficients;
        state.residual = rms_residual(model, state.pose, state.coefficients, observed_2d);
        state.residual_history.push_back(state.residual);
    }
    return state;
}

MorphableModel make_toy_model(std::uint64_t seed, int n_vertices, int k_id, int k_ex) {
    require(n_vertices >= 1 && k_id >= 1 && k_ex >= 1, ErrorCode::invalid_argument,
            "make_toy_model: V, K_id, K_ex must be positive");
    require(3 * n_vertices > k_id + k_ex, ErrorCode::invalid_argument,
            "make_toy_model: 3V must exceed K_id + K_ex");

    Rng rng(derive_seed(seed, 0x3d3d3dULL));
    const Eigen::Index dim = 3 * n_vertices;
    MorphableModel model;
    model.mean_shape = Vector::NullaryExpr(dim, [&](Eigen::Index) { return rng.normal(); });

    // One Gaussian block orthonormalized as a whole, then split: identity and
    // expression columns end up mutually orthogonal, so the two coefficient
    // groups are disentangled by construction.
    const Eigen::Index k = k_id + k_ex;
    Matrix raw = Matrix::NullaryExpr(dim, k, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
    const Eigen::HouseholderQR<Matrix> qr(raw);
    Matrix q = qr.householderQ() * Matrix::Identity(dim, k);
    // Fix each column's sign so the model is a pure function of the seed
    // regardless of QR sign conventions.
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index max_row = 0;
        q.col(c).cwiseAbs().maxCoeff(&max_row);
        if (q(max_row, c) < 0.0) q.col(c) = -q.col(c);
    }
    model.identity_basis = q.leftCols(k_id);
    model.expression_basis = q.rightCols(k_ex);
    model.validate();
    return model;
}

void MorphableModel::save(const std::filesystem::path& path) const {
    validate();
    Json j;
    j["V"] = vertex_count();
    j["K_id"] = identity_dim();
    j["K_ex"] = expression_dim();
    j["mean_shape"] = vector_to_json(mean_shape);
    j["A_id"] = matrix_to_json(identity_basis);
    j["A_ex"] = matrix_to_json(expression_basis);
    write_json_file(path, j);
}

MorphableModel MorphableModel::load(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    MorphableModel model;
    model.mean_shape = vector_from_json(j.at("mean_shape"), "mean_shape");
    model.identity_basis = matrix_from_json(j.at("A_id"), "A_id");
    model.expression_basis = matrix_from_json(j.at("A_ex"), "A_ex");
    const int v = j.at("V").get<int>();
    require(model.mean_shape.size() == 3 * v, ErrorCode::parse,
            path.string() + ": mean_shape length disagrees with V");
    require(model.identity_basis.cols() == j.at("K_id").get<int>(), ErrorCode::parse,
            path.string() + ": A_id column count disagrees with K_id");
    require(model.expression_basis.cols() == j.at("K_ex").get<int>(), ErrorCode::parse,
            path.string() + ": A_ex column count disagrees with K_ex");
    model.validate();
    return model;
}

} // namespace affect::face3dmm
