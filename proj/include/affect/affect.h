/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/affect.h
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

/*
 * C API of the affectlab shared library.
 *
 * Conventions:
 *  - every function returns an affect_status; AFFECT_OK is 0
 *  - on failure, affect_last_error() returns a thread-local message
 *  - matrices are passed as row-major double arrays
 *  - objects behind opaque handles are created by affect_*_create/load
 *    functions and must be released with the matching affect_*_free
 */
#ifndef AFFECT_AFFECT_H
#define AFFECT_AFFECT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum affect_status {
    AFFECT_OK = 0,
    AFFECT_ERR_INVALID_ARGUMENT = 1,
    AFFECT_ERR_DIMENSION_MISMATCH = 2,
    AFFECT_ERR_NUMERIC = 3,
    AFFECT_ERR_IO = 4,
    AFFECT_ERR_PARSE = 5,
    AFFECT_ERR_INTERNAL = 6
} affect_status;

const char* affect_version(void);
const char* affect_status_name(affect_status status);

/* Message describing this thread's most recent failure. */
const char* affect_last_error(void);

/* 0 = error, 1 = info, 2 = debug; overrides the AFFECTLAB_LOG env var. */
void affect_set_log_level(int level);

/* ---- evaluation metrics ------------------------------------------------ */

affect_status affect_ccc(const double* target, const double* prediction, size_t n,
                         double* out);

/* ratings: n_rows x n_raters row-major. */
affect_status affect_icc31(const double* ratings, size_t n_rows, size_t n_raters,
                           double* out);

/* out[0..3] = pcc, rmse, mse, acc. */
affect_status affect_regression_metrics(const double* target, const double* prediction,
                                        size_t n, double out[4]);

/* confusion_out must hold n_classes*n_classes entries (row = true class). */
affect_status affect_confusion_accuracy(const int32_t* true_labels,
                                        const int32_t* predicted, size_t n,
                                        int32_t n_classes, int64_t* confusion_out,
                                        double* accuracy_out);

/* ---- 3D morphable model ------------------------------------------------ */

typedef struct affect_face_model affect_face_model;

typedef struct affect_pose {
    double scale;
    double rotation[9]; /* row-major 3x3, orthonormal, det +1 */
    double translation[2];
} affect_pose;

affect_status affect_face_model_create_toy(uint64_t seed, int32_t n_vertices,
                                           int32_t k_id, int32_t k_ex,
                                           affect_face_model** out);
affect_status affect_face_model_load(const char* path, affect_face_model** out);
affect_status affect_face_model_save(const affect_face_model* model, const char* path);
void affect_face_model_free(affect_face_model* model);

affect_status affect_face_model_dims(const affect_face_model* model, int32_t* n_vertices,
                                     int32_t* k_id, int32_t* k_ex);

/* shape_out must hold 3*V doubles. */
affect_status affect_face_model_synthesize(const affect_face_model* model,
                                           const double* alpha_id, const double* alpha_ex,
                                           double* shape_out);

/* projected_out must hold 2*n_vertices doubles. */
affect_status affect_project(const affect_pose* pose, const double* shape,
                             size_t n_vertices, double* projected_out);

/* Least-squares coefficients under a known pose. */
affect_status affect_face_model_fit(const affect_face_model* model,
                                    const double* observed_2d, const affect_pose* pose,
                                    double* alpha_id_out, double* alpha_ex_out);

/* Alternating pose + coefficient recovery. Any output may be NULL. */
affect_status affect_face_model_fit_pose(const affect_face_model* model,
                                         const double* observed_2d, int32_t n_iters,
                                         affect_pose* pose_out, double* alpha_id_out,
                                         double* alpha_ex_out, double* residual_out);

/* ---- expression-embedding post-processing ------------------------------ */

typedef struct affect_pca affect_pca;

affect_status affect_pca_fit(const double* data, size_t n_samples, size_t dim,
                             int32_t n_components, affect_pca** out);
affect_status affect_pca_load(const char* path, affect_pca** out);
affect_status affect_pca_save(const affect_pca* pca, const char* path);
void affect_pca_free(affect_pca* pca);

affect_status affect_pca_dims(const affect_pca* pca, int32_t* dim, int32_t* n_components);
affect_status affect_pca_explained_variance(const affect_pca* pca, double* ratios_out);
affect_status affect_pca_transform(const affect_pca* pca, const double* x, double* z_out);
affect_status affect_pca_inverse(const affect_pca* pca, const double* z, double* x_out);

/* ---- sequence regressor ------------------------------------------------ */

typedef struct affect_regressor affect_regressor;

affect_status affect_regressor_load(const char* checkpoint_path, affect_regressor** out);
void affect_regressor_free(affect_regressor* model);

affect_status affect_regressor_dims(const affect_regressor* model, int32_t* input_dim,
                                    int32_t* hidden_dim, int32_t* output_dim);

/* sequence: n_frames x input_dim row-major; outputs_out: n_frames x output_dim.
 * Deterministic eval-mode forward pass. */
affect_status affect_regressor_forward(const affect_regressor* model,
                                       const double* sequence, size_t n_frames,
                                       double* outputs_out);

/* ---- statistical analyses ---------------------------------------------- */

/* X: n x k row-major. coefficients_out must hold k doubles. Outputs other
 * than coefficients may be NULL. ill_conditioned_out is 0/1. */
affect_status affect_linreg_fit(const double* x, const double* y, size_t n, size_t k,
                                double* coefficients_out, double* intercept_out,
                                double* r_squared_out, int32_t* ill_conditioned_out);

/* confusion_out (n_classes^2, row-major) and predictions_out (n) may be NULL. */
affect_status affect_knn_loocv(const double* features, const int32_t* labels, size_t n,
                               size_t dim, int32_t k, double* accuracy_out,
                               int64_t* confusion_out, int32_t* predictions_out);

/* ---- pipeline commands -------------------------------------------------- */

/* Each takes the command's JSON config as a string and writes its outputs
 * to the configured directory; identical configs produce identical bytes. */
affect_status affect_run_synth(const char* config_json);
affect_status affect_run_fit_pca(const char* config_json);
affect_status affect_run_train(const char* config_json);
affect_status affect_run_eval(const char* config_json);
affect_status affect_run_analyze_corr(const char* config_json);
affect_status affect_run_knn_eval(const char* config_json);
affect_status affect_run_fit_3dmm(const char* config_json);

/* Dispatch by subcommand name ("synth", "fit-pca", ...). */
affect_status affect_run_command(const char* command, const char* config_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AFFECT_AFFECT_H */
