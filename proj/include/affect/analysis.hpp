/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/analysis.hpp
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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "affect/common.hpp"

namespace affect::analysis {

struct LinRegResult {
    Vector coefficients;       // K
    double intercept = 0.0;
    double r_squared = 0.0;    // in (-inf, 1]
    double residual_norm = 0.0;
    bool ill_conditioned = false;
};

/**
 * Ordinary least squares with intercept via column-pivoted QR. A
 * rank-deficient design falls back to the ridge-stabilized normal equations
 * (lambda = 1e-10) and flags the result ill-conditioned.
 * Requires N > K.
 */
LinRegResult linreg_fit(const Eigen::Ref<const Matrix>& x,
                        const Eigen::Ref<const Vector>& y);

/**
 * One linear regression per class against its one-hot indicator target.
 * Requires every class in [0, n_classes) to be present. Because OLS is
 * linear in the target and the one-hot targets sum to the all-ones vector,
 * the per-class predictions sum to exactly 1 for every sample.
 */
std::vector<LinRegResult> onevsrest_linreg(const Eigen::Ref<const Matrix>& x,
                                           std::span<const int> labels, int n_classes);

struct KnnConfig {
    int k = 5; // Euclidean distance
};

struct KnnResult {
    double accuracy = 0.0;
    Eigen::MatrixXi confusion;    // row = true class, column = predicted
    std::vector<int> predictions; // per sample
};

/**
 * Leave-one-out k-nearest-neighbour classification: each sample gets the
 * majority class among its k nearest other samples. Ties go to the class
 * with the smallest summed neighbour distance, then to the lowest class id.
 * Requires N >= k + 1.
 */
KnnResult knn_loocv(const Eigen::Ref<const Matrix>& features,
                    std::span<const int> labels, const KnnConfig& cfg);

} // namespace affect::analysis
