/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/analysis.cpp
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
#include "affect/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "affect/metrics.hpp"

namespace affect::analysis {

LinRegResult linreg_fit(const Eigen::Ref<const Matrix>& x,
                        const Eigen::Ref<const Vector>& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    require(y.size() == n, ErrorCode::dimension_mismatch,
            "linreg_fit: X and y row counts differ");
    require(n > k, ErrorCode::invalid_argument, "linreg_fit: needs more samples than features");
    require_finite(x, "linreg_fit X");
    require_finite(y, "linreg_fit y");

    Matrix design(n, k + 1);
    design.leftCols(k) = x;
    design.col(k).setOnes();

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    LinRegResult result;
    Vector beta;
    if (qr.rank() < k + 1) {
        // Ridge-stabilized normal equations keep degenerate inputs solvable.
        Matrix gram = design.transpose() * design;
        gram.diagonal().array() += 1e-10;
        beta = gram.ldlt().solve(design.transpose() * y);
        result.ill_conditioned = true;
    } else {
        beta = qr.solve(y);
    }

    result.coefficients = beta.head(k);
    result.intercept = beta(k);
    const Vector residual = y - design * beta;
    result.residual_norm = residual.norm();
    const double ss_res = residual.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (ss_tot > 0.0) {
        result.r_squared = 1.0 - ss_res / ss_tot;
    } else {
        result.r_squared = ss_res <= 1e-16 ? 1.0 : 0.0;
    }
    return result;
}

std::vector<LinRegResult> onevsrest_linreg(const Eigen::Ref<const Matrix>& x,
                                           std::span<const int> labels, int n_classes) {
    require(static_cast<Eigen::Index>(labels.size()) == x.rows(), ErrorCode::dimension_mismatch,
            "onevsrest_linreg: label count does not match X");
    require(n_classes >= 1, ErrorCode::invalid_argument,
            "onevsrest_linreg: n_classes must be positive");
    std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
    for (const int label : labels) {
        require(label >= 0 && label < n_classes, ErrorCode::invalid_argument,
                "onevsrest_linreg: label out of range");
        seen[static_cast<std::size_t>(label)] = true;
    }
    for (int c = 0; c < n_classes; ++c) {
        require(seen[static_cast<std::size_t>(c)], ErrorCode::invalid_argument,
                "onevsrest_linreg: class " + std::to_string(c) + " has no samples");
    }

    std::vector<LinRegResult> results;
    results.reserve(static_cast<std::size_t>(n_classes));
    Vector target(x.rows());
    for (int c = 0; c < n_classes; ++c) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            target(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
        }
        results.push_back(linreg_fit(x, target));
    }
    return results;
}

KnnResult knn_loocv(const Eigen::Ref<const Matrix>& features,
                    std::span<const int> labels, const KnnConfig& cfg) {
    const Eigen::Index n = features.rows();
    require(static_cast<Eigen::Index>(labels.size()) == n, ErrorCode::dimension_mismatch,
            "knn_loocv: label count does not match features");
    require(cfg.k >= 1, ErrorCode::invalid_argument, "knn_loocv: k must be >= 1");
    require(n >= cfg.k + 1, ErrorCode::invalid_argument,
            "knn_loocv: needs at least k + 1 samples");
    require_finite(features, "knn_loocv features");

    int n_classes = 0;
    for (const int label : labels) {
        require(label >= 0, ErrorCode::invalid_argument, "knn_loocv: negative label");
        n_classes = std::max(n_classes, label + 1);
    }

    std::vector<int> predictions(static_cast<std::size_t>(n));
    std::vector<std::pair<double, Eigen::Index>> distances(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t idx = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            distances[idx++] = {(features.row(i) - features.row(j)).norm(), j};
        }
        // Distance then index: deterministic neighbour set under exact ties.
        std::partial_sort(distances.begin(), distances.begin() + cfg.k, distances.end());

        std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
        std::vector<double> vote_distance(static_cast<std::size_t>(n_classes), 0.0);
        for (int m = 0; m < cfg.k; ++m) {
            const auto& [dist, j] = distances[static_cast<std::size_t>(m)];
            const auto cls = static_cast<std::size_t>(labels[static_cast<std::size_t>(j)]);
            votes[cls] += 1;
            vote_distance[cls] += dist;
        }
        int best = -1;
        for (int c = 0; c < n_classes; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            if (votes[cu] == 0) continue;
            if (best < 0) {
                best = c;
                continue;
            }
            const auto bu = static_cast<std::size_t>(best);
            if (votes[cu] > votes[bu] ||
                (votes[cu] == votes[bu] && vote_distance[cu] < vote_distance[bu])) {
                best = c;
            }
        }
        predictions[static_cast<std::size_t>(i)] = best;
    }

    const auto confusion = metrics::confusion_and_accuracy(
        labels, {predictions.data(), predictions.size()}, n_classes);
    KnnResult result;
    result.accuracy = confusion.accuracy;
    result.confusion = confusion.counts;
    result.predictions = std::move(predictions);
    return result;
}

} // namespace affect::analysis
