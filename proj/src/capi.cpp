/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/capi.cpp
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
#include "affect/affect.h"

#include <cstring>
#include <string>

#include "affect/analysis.hpp"
#include "affect/common.hpp"
#include "affect/face3dmm.hpp"
#include "affect/features.hpp"
#include "affect/log.hpp"
#include "affect/metrics.hpp"
#include "affect/pipeline.hpp"
#include "affect/temporal.hpp"

struct affect_face_model {
    affect::face3dmm::MorphableModel impl;
};

struct affect_pca {
    affect::features::PcaModel impl;
};

struct affect_regressor {
    affect::temporal::BiGruRegressor impl;
};

namespace {

thread_local std::string t_last_error;

affect_status to_status(affect::ErrorCode code) {
    using affect::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument: return AFFECT_ERR_INVALID_ARGUMENT;
        case ErrorCode::dimension_mismatch: return AFFECT_ERR_DIMENSION_MISMATCH;
        case ErrorCode::numeric: return AFFECT_ERR_NUMERIC;
        case ErrorCode::io: return AFFECT_ERR_IO;
        case ErrorCode::parse: return AFFECT_ERR_PARSE;
        default: return AFFECT_ERR_INTERNAL;
    }
}

/// Runs fn, translating exceptions into status codes + the thread-local
/// error message. The C boundary never lets an exception escape.
template <typename Fn>
affect_status guarded(Fn&& fn) {
    try {
        fn();
        return AFFECT_OK;
    } catch (const affect::Error& e) {
        t_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return AFFECT_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return AFFECT_ERR_INTERNAL;
    }
}

void check_pointer(const void* p, const char* what) {
    affect::require(p != nullptr, affect::ErrorCode::invalid_argument,
                    std::string(what) + " must not be null");
}

affect::face3dmm::PoseParams pose_from_c(const affect_pose* pose) {
    check_pointer(pose, "pose");
    affect::face3dmm::PoseParams out;
    out.scale = pose->scale;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.rotation(r, c) = pose->rotation[3 * r + c];
    out.translation = Eigen::Vector2d(pose->translation[0], pose->translation[1]);
    return out;
}

void pose_to_c(const affect::face3dmm::PoseParams& pose, affect_pose* out) {
    out->scale = pose.scale;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out->rotation[3 * r + c] = pose.rotation(r, c);
    out->translation[0] = pose.translation(0);
    out->translation[1] = pose.translation(1);
}

affect::Json parse_config(const char* config_json) {
    check_pointer(config_json, "config_json");
    try {
        return affect::Json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
        affect::raise(affect::ErrorCode::parse, std::string("config: ") + e.what());
    }
}

} // namespace

extern "C" {

const char* affect_version(void) { return affect::version_string(); }

const char* affect_status_name(affect_status status) {
    switch (status) {
        case AFFECT_OK: return "ok";
        case AFFECT_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case AFFECT_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
        case AFFECT_ERR_NUMERIC: return "numeric";
        case AFFECT_ERR_IO: return "io";
        case AFFECT_ERR_PARSE: return "parse";
        default: return "internal";
    }
}

const char* affect_last_error(void) { return t_last_error.c_str(); }

void affect_set_log_level(int level) {
    if (level <= 0) affect::set_log_level(affect::LogLevel::error);
    else if (level == 1) affect::set_log_level(affect::LogLevel::info);
    else affect::set_log_level(affect::LogLevel::debug);
}

/* ---- metrics ----------------------------------------------------------- */

affect_status affect_ccc(const double* target, const double* prediction, size_t n,
                         double* out) {
    return guarded([&] {
        check_pointer(target, "target");
        check_pointer(prediction, "prediction");
        check_pointer(out, "out");
        *out = affect::metrics::ccc({target, n}, {prediction, n});
    });
}

affect_status affect_icc31(const double* ratings, size_t n_rows, size_t n_raters,
                           double* out) {
    return guarded([&] {
        check_pointer(ratings, "ratings");
        check_pointer(out, "out");
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            view(ratings, static_cast<Eigen::Index>(n_rows),
                 static_cast<Eigen::Index>(n_raters));
        *out = affect::metrics::icc31(affect::Matrix(view));
    });
}

affect_status affect_regression_metrics(const double* target, const double* prediction,
                                        size_t n, double out[4]) {
    return guarded([&] {
        check_pointer(target, "target");
        check_pointer(prediction, "prediction");
        check_pointer(out, "out");
        const auto m = affect::metrics::regression_metrics({target, n}, {prediction, n});
        out[0] = m.pcc;
        out[1] = m.rmse;
        out[2] = m.mse;
        out[3] = m.acc;
    });
}

affect_status affect_confusion_accuracy(const int32_t* true_labels,
                                        const int32_t* predicted, size_t n,
                                        int32_t n_classes, int64_t* confusion_out,
                                        double* accuracy_out) {
    return guarded([&] {
        check_pointer(true_labels, "true_labels");
        check_pointer(predicted, "predicted");
        std::vector<int> truth(true_labels, true_labels + n);
        std::vector<int> pred(predicted, predicted + n);
        const auto result = affect::metrics::confusion_and_accuracy(
            {truth.data(), truth.size()}, {pred.data(), pred.size()}, n_classes);
        if (confusion_out != nullptr) {
            for (int r = 0; r < n_classes; ++r)
                for (int c = 0; c < n_classes; ++c)
                    confusion_out[r * n_classes + c] = result.counts(r, c);
        }
        if (accuracy_out != nullptr) *accuracy_out = result.accuracy;
    });
}

/* ---- 3D morphable model ------------------------------------------------ */

affect_status affect_face_model_create_toy(uint64_t seed, int32_t n_vertices, int32_t k_id,
                                           int32_t k_ex, affect_face_model** out) {
    return guarded([&] {
        check_pointer(out, "out");
        auto model = affect::face3dmm::make_toy_model(seed, n_vertices, k_id, k_ex);
        *out = new affect_face_model{std::move(model)};
    });
}

affect_status affect_face_model_load(const char* path, affect_face_model** out) {
    return guarded([&] {
        check_pointer(path, "path");
        check_pointer(out, "out");
        auto model = affect::face3dmm::MorphableModel::load(path);
        *out = new affect_face_model{std::move(model)};
    });
}

affect_status affect_face_model_save(const affect_face_model* model, const char* path) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(path, "path");
        model->impl.save(path);
    });
}

void affect_face_model_free(affect_face_model* model) { delete model; }

affect_status affect_face_model_dims(const affect_face_model* model, int32_t* n_vertices,
                                     int32_t* k_id, int32_t* k_ex) {
    return guarded([&] {
        check_pointer(model, "model");
        if (n_vertices != nullptr) *n_vertices = model->impl.vertex_count();
        if (k_id != nullptr) *k_id = model->impl.identity_dim();
        if (k_ex != nullptr) *k_ex = model->impl.expression_dim();
    });
}

affect_status affect_face_model_synthesize(const affect_face_model* model,
                                           const double* alpha_id, const double* alpha_ex,
                                           double* shape_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(alpha_id, "alpha_id");
        check_pointer(alpha_ex, "alpha_ex");
        check_pointer(shape_out, "shape_out");
        affect::face3dmm::ShapeCoefficients coeffs;
        coeffs.identity = Eigen::Map<const affect::Vector>(alpha_id, model->impl.identity_dim());
        coeffs.expression =
            Eigen::Map<const affect::Vector>(alpha_ex, model->impl.expression_dim());
        const affect::Vector shape = synthesize_shape(model->impl, coeffs);
        std::memcpy(shape_out, shape.data(), sizeof(double) * shape.size());
    });
}

affect_status affect_project(const affect_pose* pose, const double* shape,
                             size_t n_vertices, double* projected_out) {
    return guarded([&] {
        check_pointer(shape, "shape");
        check_pointer(projected_out, "projected_out");
        const auto p = pose_from_c(pose);
        const Eigen::Map<const affect::Vector> view(shape,
                                                    static_cast<Eigen::Index>(3 * n_vertices));
        const affect::Vector projected = affect::face3dmm::project(p, view);
        std::memcpy(projected_out, projected.data(), sizeof(double) * projected.size());
    });
}

affect_status affect_face_model_fit(const affect_face_model* model,
                                    const double* observed_2d, const affect_pose* pose,
                                    double* alpha_id_out, double* alpha_ex_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(observed_2d, "observed_2d");
        const auto p = pose_from_c(pose);
        const Eigen::Map<const affect::Vector> observed(
            observed_2d, 2 * model->impl.vertex_count());
        const auto fit = affect::face3dmm::fit_coefficients(model->impl, observed, p);
        if (alpha_id_out != nullptr) {
            std::memcpy(alpha_id_out, fit.coefficients.identity.data(),
                        sizeof(double) * fit.coefficients.identity.size());
        }
        if (alpha_ex_out != nullptr) {
            std::memcpy(alpha_ex_out, fit.coefficients.expression.data(),
                        sizeof(double) * fit.coefficients.expression.size());
        }
    });
}

affect_status affect_face_model_fit_pose(const affect_face_model* model,
                                         const double* observed_2d, int32_t n_iters,
                                         affect_pose* pose_out, double* alpha_id_out,
                                         double* alpha_ex_out, double* residual_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(observed_2d, "observed_2d");
        const Eigen::Map<const affect::Vector> observed(
            observed_2d, 2 * model->impl.vertex_count());
        const auto fit =
            affect::face3dmm::fit_pose_and_coefficients(model->impl, observed, n_iters);
        if (pose_out != nullptr) pose_to_c(fit.pose, pose_out);
        if (alpha_id_out != nullptr) {
            std::memcpy(alpha_id_out, fit.coefficients.identity.data(),
                        sizeof(double) * fit.coefficients.identity.size());
        }
        if (alpha_ex_out != nullptr) {
            std::memcpy(alpha_ex_out, fit.coefficients.expression.data(),
                        sizeof(double) * fit.coefficients.expression.size());
        }
        if (residual_out != nullptr) *residual_out = fit.residual;
    });
}

/* ---- PCA ----------------------------------------------------------------- */

affect_status affect_pca_fit(const double* data, size_t n_samples, size_t dim,
                             int32_t n_components, affect_pca** out) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(out, "out");
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            view(data, static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(dim));
        auto model = affect::features::fit_pca(affect::Matrix(view), n_components);
        *out = new affect_pca{std::move(model)};
    });
}

affect_status affect_pca_load(const char* path, affect_pca** out) {
    return guarded([&] {
        check_pointer(path, "path");
        check_pointer(out, "out");
        auto model = affect::features::PcaModel::load(path);
        *out = new affect_pca{std::move(model)};
    });
}

affect_status affect_pca_save(const affect_pca* pca, const char* path) {
    return guarded([&] {
        check_pointer(pca, "pca");
        check_pointer(path, "path");
        pca->impl.save(path);
    });
}

void affect_pca_free(affect_pca* pca) { delete pca; }

affect_status affect_pca_dims(const affect_pca* pca, int32_t* dim, int32_t* n_components) {
    return guarded([&] {
        check_pointer(pca, "pca");
        if (dim != nullptr) *dim = pca->impl.input_dim();
        if (n_components != nullptr) *n_components = pca->impl.n_components();
    });
}

affect_status affect_pca_explained_variance(const affect_pca* pca, double* ratios_out) {
    return guarded([&] {
        check_pointer(pca, "pca");
        check_pointer(ratios_out, "ratios_out");
        std::memcpy(ratios_out, pca->impl.explained_variance_ratio.data(),
                    sizeof(double) * pca->impl.explained_variance_ratio.size());
    });
}

affect_status affect_pca_transform(const affect_pca* pca, const double* x, double* z_out) {
    return guarded([&] {
        check_pointer(pca, "pca");
        check_pointer(x, "x");
        check_pointer(z_out, "z_out");
        const Eigen::Map<const affect::Vector> input(x, pca->impl.input_dim());
        const affect::Vector z = affect::features::pca_transform(pca->impl, input);
        std::memcpy(z_out, z.data(), sizeof(double) * z.size());
    });
}

affect_status affect_pca_inverse(const affect_pca* pca, const double* z, double* x_out) {
    return guarded([&] {
        check_pointer(pca, "pca");
        check_pointer(z, "z");
        check_pointer(x_out, "x_out");
        const Eigen::Map<const affect::Vector> input(z, pca->impl.n_components());
        const affect::Vector x = affect::features::pca_inverse(pca->impl, input);
        std::memcpy(x_out, x.data(), sizeof(double) * x.size());
    });
}

/* ---- regressor ------------------------------------------------------------ */

affect_status affect_regressor_load(const char* checkpoint_path, affect_regressor** out) {
    return guarded([&] {
        check_pointer(checkpoint_path, "checkpoint_path");
        check_pointer(out, "out");
        auto ckpt = affect::temporal::load_checkpoint(checkpoint_path);
        *out = new affect_regressor{std::move(ckpt.model)};
    });
}

void affect_regressor_free(affect_regressor* model) { delete model; }

affect_status affect_regressor_dims(const affect_regressor* model, int32_t* input_dim,
                                    int32_t* hidden_dim, int32_t* output_dim) {
    return guarded([&] {
        check_pointer(model, "model");
        if (input_dim != nullptr) *input_dim = model->impl.input_dim;
        if (hidden_dim != nullptr) *hidden_dim = model->impl.hidden_dim;
        if (output_dim != nullptr) *output_dim = model->impl.output_dim;
    });
}

affect_status affect_regressor_forward(const affect_regressor* model,
                                       const double* sequence, size_t n_frames,
                                       double* outputs_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(sequence, "sequence");
        check_pointer(outputs_out, "outputs_out");
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            view(sequence, static_cast<Eigen::Index>(n_frames), model->impl.input_dim);
        const affect::Matrix outputs = affect::temporal::bigru_forward(
            affect::Matrix(view), model->impl, /*train_mode=*/false, /*rng_seed=*/0);
        for (Eigen::Index t = 0; t < outputs.rows(); ++t)
            for (Eigen::Index l = 0; l < outputs.cols(); ++l)
                outputs_out[t * outputs.cols() + l] = outputs(t, l);
    });
}

/* ---- analyses -------------------------------------------------------------- */

affect_status affect_linreg_fit(const double* x, const double* y, size_t n, size_t k,
                                double* coefficients_out, double* intercept_out,
                                double* r_squared_out, int32_t* ill_conditioned_out) {
    return guarded([&] {
        check_pointer(x, "x");
        check_pointer(y, "y");
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            design(x, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
        const Eigen::Map<const affect::Vector> target(y, static_cast<Eigen::Index>(n));
        const auto fit = affect::analysis::linreg_fit(affect::Matrix(design), target);
        if (coefficients_out != nullptr) {
            std::memcpy(coefficients_out, fit.coefficients.data(),
                        sizeof(double) * fit.coefficients.size());
        }
        if (intercept_out != nullptr) *intercept_out = fit.intercept;
        if (r_squared_out != nullptr) *r_squared_out = fit.r_squared;
        if (ill_conditioned_out != nullptr) *ill_conditioned_out = fit.ill_conditioned ? 1 : 0;
    });
}

affect_status affect_knn_loocv(const double* features, const int32_t* labels, size_t n,
                               size_t dim, int32_t k, double* accuracy_out,
                               int64_t* confusion_out, int32_t* predictions_out) {
    return guarded([&] {
        check_pointer(features, "features");
        check_pointer(labels, "labels");
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            view(features, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
        std::vector<int> label_vec(labels, labels + n);
        const auto result = affect::analysis::knn_loocv(
            affect::Matrix(view), {label_vec.data(), label_vec.size()},
            affect::analysis::KnnConfig{k});
        if (accuracy_out != nullptr) *accuracy_out = result.accuracy;
        if (confusion_out != nullptr) {
            const auto classes = result.confusion.rows();
            for (Eigen::Index r = 0; r < classes; ++r)
                for (Eigen::Index c = 0; c < classes; ++c)
                    confusion_out[r * classes + c] = result.confusion(r, c);
        }
        if (predictions_out != nullptr) {
            for (std::size_t i = 0; i < result.predictions.size(); ++i)
                predictions_out[i] = result.predictions[i];
        }
    });
}

/* ---- pipeline ----------------------------------------------------------- */

affect_status affect_run_synth(const char* config_json) {
    return guarded([&] { affect::pipeline::run_synth(parse_config(config_json)); });
}

affect_status affect_run_fit_pca(const char* config_json) {
    return guarded([&] { affect::pipeline::run_fit_pca(parse_config(config_json)); });
}

affect_status affect_run_train(const char* config_json) {
    return guarded([&] { affect::pipeline::run_train(parse_config(config_json)); });
}

affect_status affect_run_eval(const char* config_json) {
    return guarded([&] { affect::pipeline::run_eval(parse_config(config_json)); });
}

affect_status affect_run_analyze_corr(const char* config_json) {
    return guarded([&] { affect::pipeline::run_analyze_corr(parse_config(config_json)); });
}

affect_status affect_run_knn_eval(const char* config_json) {
    return guarded([&] { affect::pipeline::run_knn_eval(parse_config(config_json)); });
}

affect_status affect_run_fit_3dmm(const char* config_json) {
    return guarded([&] { affect::pipeline::run_fit_3dmm(parse_config(config_json)); });
}

affect_status affect_run_command(const char* command, const char* config_json) {
    return guarded([&] {
        check_pointer(command, "command");
        affect::pipeline::run_command(command, parse_config(config_json));
    });
}

} /* extern "C" */
