/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/metrics.hpp
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

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/common.hpp"
#include "affect/json_io.hpp"

namespace affect::metrics {

/**
 * Lin's concordance correlation coefficient between a target and a predicted
 * series, with population (1/N) statistics:
 *
 *   ccc = 2 * cov / ((mean_t - mean_p)^2 + var_t + var_p)
 *
 * Both series constant and equal is perfect agreement and returns 1. If one
 * series is constant the covariance vanishes and the result is 0.
 *
 * Requires equal lengths, N >= 2, finite values. Result lies in [-1, 1].
 */
double ccc(std::span<const double> target, std::span<const double> prediction);

/**
 * Intraclass correlation ICC(3,1), two-way mixed, consistency form:
 *
 *   (BMS - EMS) / (BMS + (R-1) * EMS)
 *
 * from the two-way ANOVA of an N x R ratings matrix (N targets, R raters).
 * A matrix whose rows are each constant across raters scores 1 even when the
 * denominator degenerates; any other zero-denominator input is an error.
 */
double icc31(const Eigen::Ref<const Matrix>& ratings);

struct RegressionMetrics {
    double pcc = 0.0;
    double rmse = 0.0;
    double mse = 0.0;
    double acc = 0.0;
};

/**
 * Pointwise agreement metrics for one output dimension:
 * pcc (population statistics; 0 by convention when either series is
 * constant), rmse, mse, and acc = 1 - mean absolute error.
 */
RegressionMetrics regression_metrics(std::span<const double> target,
                                     std::span<const double> prediction);

struct ConfusionResult {
    Eigen::MatrixXi counts; // row = true class, column = predicted class
    double accuracy = 0.0;  // trace / total
};

ConfusionResult confusion_and_accuracy(std::span<const int> true_labels,
                                       std::span<const int> predicted,
                                       int n_classes);

/// Per-dimension metric bundle, the shape every evaluation report takes.
struct DimensionMetrics {
    double ccc = 0.0;
    double icc = 0.0;
    double mse = 0.0;
    double pcc = 0.0;
    double rmse = 0.0;
    double acc = 0.0;
};

struct MetricsReport {
    std::map<std::string, DimensionMetrics> dimensions;

    /// Flat object keyed "<dimension>.<metric>".
    Json to_json() const;
    static MetricsReport from_json(const Json& j);
};

/// All six metrics for one dimension of paired frames.
DimensionMetrics evaluate_dimension(std::span<const double> target,
                                    std::span<const double> prediction);

} // namespace affect::metrics
