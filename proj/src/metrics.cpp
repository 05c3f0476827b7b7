/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/metrics.cpp
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
#include "affect/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace affect::metrics {

namespace {

struct PairedStats {
    double mean_t = 0.0, mean_p = 0.0;
    double var_t = 0.0, var_p = 0.0; // population (1/N)
    double cov = 0.0;                // population (1/N)
    std::size_t n = 0;
};

PairedStats paired_stats(std::span<const double> t, std::span<const double> p) {
    const std::size_t n = t.size();
    PairedStats s;
    s.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        s.mean_t += t[i];
        s.mean_p += p[i];
    }
    s.mean_t /= static_cast<double>(n);
    s.mean_p /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = t[i] - s.mean_t;
        const double dp = p[i] - s.mean_p;
        s.var_t += dt * dt;
        s.var_p += dp * dp;
        s.cov += dt * dp;
    }
    s.var_t /= static_cast<double>(n);
    s.var_p /= static_cast<double>(n);
    s.cov /= static_cast<double>(n);
    return s;
}

void check_pair(std::span<const double> t, std::span<const double> p,
                std::size_t min_len, const char* op) {
    require(t.size() == p.size(), ErrorCode::dimension_mismatch,
            std::string(op) + ": series lengths differ (" + std::to_string(t.size()) +
                " vs " + std::to_string(p.size()) + ")");
    require(t.size() >= min_len, ErrorCode::invalid_argument,
            std::string(op) + ": needs at least " + std::to_string(min_len) + " samples");
    require_finite(t, std::string(op) + " target");
    require_finite(p, std::string(op) + " prediction");
}

} // namespace

double ccc(std::span<const double> target, std::span<const double> prediction) {
    check_pair(target, prediction, 2, "ccc");
    const PairedStats s = paired_stats(target, prediction);
    const double mean_gap = s.mean_t - s.mean_p;
    const double denom = mean_gap * mean_gap + s.var_t + s.var_p;
    if (denom == 0.0) return 1.0; // both series constant and equal
    return 2.0 * s.cov / denom;
}

double icc31(const Eigen::Ref<const Matrix>& ratings) {
    const Eigen::Index n = ratings.rows();
    const Eigen::Index r = ratings.cols();
    require(n >= 2, ErrorCode::invalid_argument, "icc31: needs at least 2 rows");
    require(r >= 2, ErrorCode::invalid_argument, "icc31: needs at least 2 raters");
    require_finite(ratings, "icc31 ratings");

    const double grand = ratings.mean();
    const Vector row_means = ratings.rowwise().mean();
    const Vector col_means = ratings.colwise().mean();

    // Two-way decomposition: rows (targets), columns (raters), residual.
    const double ss_rows = static_cast<double>(r) * (row_means.array() - grand).square().sum();
    double ss_resid = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) {
            const double e = ratings(i, j) - row_means(i) - col_means(j) + grand;
            ss_resid += e * e;
        }
    }
    const double bms = ss_rows / static_cast<double>(n - 1);
    const double ems = ss_resid / static_cast<double>((n - 1) * (r - 1));

    const double denom = bms + static_cast<double>(r - 1) * ems;
    const double total_ms = (ratings.array() - grand).square().sum() /
                            static_cast<double>(n * r - 1);
    if (denom <= 1e-12 * std::max(1.0, total_ms)) {
        const bool rows_constant =
            (ratings.colwise() - ratings.col(0)).cwiseAbs().maxCoeff() == 0.0;
        if (rows_constant) return 1.0;
        raise(ErrorCode::numeric, "icc31: degenerate ANOVA (no target variance)");
    }
    return (bms - ems) / denom;
}

RegressionMetrics regression_metrics(std::span<const double> target,
                                     std::span<const double> prediction) {
    check_pair(target, prediction, 1, "regression_metrics");
    const PairedStats s = paired_stats(target, prediction);

    RegressionMetrics out;
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
        const double d = target[i] - prediction[i];
        se += d * d;
        ae += std::abs(d);
    }
    out.mse = se / static_cast<double>(s.n);
    out.rmse = std::sqrt(out.mse);
    out.acc = 1.0 - ae / static_cast<double>(s.n);
    const double sigma_product = std::sqrt(s.var_t) * std::sqrt(s.var_p);
    out.pcc = sigma_product == 0.0 ? 0.0 : s.cov / sigma_product;
    return out;
}

ConfusionResult confusion_and_accuracy(std::span<const int> true_labels,
                                       std::span<const int> predicted,
                                       int n_classes) {
    require(true_labels.size() == predicted.size(), ErrorCode::dimension_mismatch,
            "confusion_and_accuracy: label arrays differ in length");
    require(!true_labels.empty(), ErrorCode::invalid_argument,
            "confusion_and_accuracy: empty input");
    require(n_classes >= 1, ErrorCode::invalid_argument,
            "confusion_and_accuracy: n_classes must be positive");

    ConfusionResult result;
    result.counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        const int t = true_labels[i];
        const int p = predicted[i];
        require(t >= 0 && t < n_classes && p >= 0 && p < n_classes,
                ErrorCode::invalid_argument,
                "confusion_and_accuracy: label out of range at index " + std::to_string(i));
        result.counts(t, p) += 1;
    }
    result.accuracy = static_cast<double>(result.counts.trace()) /
                      static_cast<double>(true_labels.size());
    return result;
}

DimensionMetrics evaluate_dimension(std::span<const double> target,
                                    std::span<const double> prediction) {
    DimensionMetrics d;
    d.ccc = ccc(target, prediction);
    const RegressionMetrics reg = regression_metrics(target, prediction);
    d.pcc = reg.pcc;
    d.rmse = reg.rmse;
    d.mse = reg.mse;
    d.acc = reg.acc;

    Matrix ratings(static_cast<Eigen::Index>(target.size()), 2);
    for (std::size_t i = 0; i < target.size(); ++i) {
        ratings(static_cast<Eigen::Index>(i), 0) = target[i];
        ratings(static_cast<Eigen::Index>(i), 1) = prediction[i];
    }
    d.icc = icc31(ratings);
    return d;
}

Json MetricsReport::to_json() const {
    Json out = Json::object();
    for (const auto& [name, m] : dimensions) {
        out[name + ".ccc"] = m.ccc;
        out[name + ".icc"] = m.icc;
        out[name + ".mse"] = m.mse;
        out[name + ".pcc"] = m.pcc;
        out[name + ".rmse"] = m.rmse;
        out[name + ".acc"] = m.acc;
    }
    return out;
}

MetricsReport MetricsReport::from_json(const Json& j) {
    MetricsReport report;
    for (const auto& [key, value] : j.items()) {
        const auto dot = key.rfind('.');
        require(dot != std::string::npos, ErrorCode::parse,
                "MetricsReport: bad key '" + key + "'");
        const std::string dim = key.substr(0, dot);
        const std::string metric = key.substr(dot + 1);
        DimensionMetrics& m = report.dimensions[dim];
        const double v = value.get<double>();
        if (metric == "ccc") m.ccc = v;
        else if (metric == "icc") m.icc = v;
        else if (metric == "mse") m.mse = v;
        else if (metric == "pcc") m.pcc = v;
        else if (metric == "rmse") m.rmse = v;
        else if (metric == "acc") m.acc = v;
        else raise(ErrorCode::parse, "MetricsReport: unknown metric '" + metric + "'");
    }
    return report;
}

} // namespace affect::metrics
