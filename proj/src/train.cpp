/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/train.cpp
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
#include <cmath>
#include <numeric>

#include "affect/log.hpp"
#include "affect/rng.hpp"
#include "affect/temporal.hpp"

namespace affect::temporal {

namespace {

void add_into(BiGruParams& dst, const BiGruParams& src) {
    auto dst_refs = tensor_refs(dst);
    auto src_refs = tensor_refs(const_cast<BiGruParams&>(src));
    for (std::size_t i = 0; i < dst_refs.size(); ++i) {
        Eigen::Map<Vector>(dst_refs[i].data, dst_refs[i].size()) +=
            Eigen::Map<const Vector>(src_refs[i].data, src_refs[i].size());
    }
}

struct PooledSeries {
    std::vector<double> target;
    std::vector<double> prediction;
};

/// Predictions over a set of windows, accumulated per label dimension,
/// keyed by sequence for the per-sequence pooling mode.
struct EvalAccumulator {
    // [sequence][dimension] -> series
    std::map<int, std::vector<PooledSeries>> per_sequence;
    int label_dim = 0;

    void add(int sequence_index, const Matrix& preds, const Matrix& targets) {
        auto& dims = per_sequence[sequence_index];
        if (dims.empty()) dims.resize(static_cast<std::size_t>(label_dim));
        for (int l = 0; l < label_dim; ++l) {
            auto& series = dims[static_cast<std::size_t>(l)];
            for (Eigen::Index t = 0; t < preds.rows(); ++t) {
                series.target.push_back(targets(t, l));
                series.prediction.push_back(preds(t, l));
            }
        }
    }
};

metrics::DimensionMetrics lenient_dimension(std::span<const double> target,
                                            std::span<const double> prediction) {
    metrics::DimensionMetrics d;
    d.ccc = metrics::ccc(target, prediction);
    const auto reg = metrics::regression_metrics(target, prediction);
    d.pcc = reg.pcc;
    d.rmse = reg.rmse;
    d.mse = reg.mse;
    d.acc = reg.acc;
    Matrix ratings(static_cast<Eigen::Index>(target.size()), 2);
    for (std::size_t i = 0; i < target.size(); ++i) {
        ratings(static_cast<Eigen::Index>(i), 0) = target[i];
        ratings(static_cast<Eigen::Index>(i), 1) = prediction[i];
    }
    try {
        d.icc = metrics::icc31(ratings);
    } catch (const Error&) {
        d.icc = 0.0; // degenerate ANOVA on a cold model; never the best epoch
    }
    return d;
}

metrics::MetricsReport report_from_accumulator(const EvalAccumulator& acc,
                                               const std::vector<std::string>& label_names,
                                               Pooling pooling, bool lenient) {
    metrics::MetricsReport report;
    const int label_dim = static_cast<int>(label_names.size());

    if (pooling == Pooling::pooled) {
        std::vector<PooledSeries> pooled(static_cast<std::size_t>(label_dim));
        for (const auto& [seq, dims] : acc.per_sequence) {
            for (int l = 0; l < label_dim; ++l) {
                const auto& s = dims[static_cast<std::size_t>(l)];
                auto& p = pooled[static_cast<std::size_t>(l)];
                p.target.insert(p.target.end(), s.target.begin(), s.target.end());
                p.prediction.insert(p.prediction.end(), s.prediction.begin(), s.prediction.end());
            }
        }
        for (int l = 0; l < label_dim; ++l) {
            const auto& p = pooled[static_cast<std::size_t>(l)];
            report.dimensions[label_names[static_cast<std::size_t>(l)]] =
                lenient ? lenient_dimension(p.target, p.prediction)
                        : metrics::evaluate_dimension(p.target, p.prediction);
        }
        return report;
    }

    // Per-sequence: metrics for each sequence separately, then the plain
    // average across sequences.
    for (int l = 0; l < label_dim; ++l) {
        metrics::DimensionMetrics sum;
        int count = 0;
        for (const auto& [seq, dims] : acc.per_sequence) {
            const auto& s = dims[static_cast<std::size_t>(l)];
            const metrics::DimensionMetrics d =
                lenient ? lenient_dimension(s.target, s.prediction)
                        : metrics::evaluate_dimension(s.target, s.prediction);
            sum.ccc += d.ccc;
            sum.icc += d.icc;
            sum.mse += d.mse;
            sum.pcc += d.pcc;
            sum.rmse += d.rmse;
            sum.acc += d.acc;
            ++count;
        }
        require(count > 0, ErrorCode::invalid_argument, "evaluate: no sequences in split");
        const double inv = 1.0 / static_cast<double>(count);
        sum.ccc *= inv;
        sum.icc *= inv;
        sum.mse *= inv;
        sum.pcc *= inv;
        sum.rmse *= inv;
        sum.acc *= inv;
        report.dimensions[label_names[static_cast<std::size_t>(l)]] = sum;
    }
    return report;
}

metrics::MetricsReport evaluate_impl(const BiGruRegressor& model,
                                     const dataio::SequenceDataset& dataset,
                                     dataio::Split split, int seq_len, Pooling pooling,
                                     bool lenient) {
    const auto windows = dataio::make_windows(dataset, split, seq_len, seq_len);
    require(!windows.empty(), ErrorCode::invalid_argument,
            std::string("evaluate: split '") + dataio::split_name(split) +
                "' has no usable windows");
    EvalAccumulator acc;
    acc.label_dim = dataset.label_dim();
    for (const auto& w : windows) {
        const auto& record = dataset.sequences[static_cast<std::size_t>(w.sequence_index)];
        const Matrix preds = bigru_forward(record.frames.middleRows(w.start, w.length),
                                           model, /*train_mode=*/false, /*rng_seed=*/0);
        acc.add(w.sequence_index, preds, record.labels.middleRows(w.start, w.length));
    }
    return report_from_accumulator(acc, dataset.label_names, pooling, lenient);
}

} // namespace

double selection_score(LossKind kind, const metrics::MetricsReport& report) {
    double sum = 0.0;
    int count = 0;
    for (const auto& [name, d] : report.dimensions) {
        sum += kind == LossKind::va_ccc_mse ? d.ccc : d.icc;
        ++count;
    }
    require(count > 0, ErrorCode::invalid_argument, "selection_score: empty report");
    return sum / static_cast<double>(count);
}

metrics::MetricsReport evaluate(const BiGruRegressor& model,
                                const dataio::SequenceDataset& dataset,
                                dataio::Split split, int seq_len, Pooling pooling) {
    return evaluate_impl(model, dataset, split, seq_len, pooling, /*lenient=*/false);
}

TrainResult train(const dataio::SequenceDataset& dataset, BiGruRegressor model,
                  const TrainConfig& cfg) {
    require(dataset.feature_dim == model.input_dim, ErrorCode::dimension_mismatch,
            "train: dataset feature dimension does not match the model");
    require(dataset.label_dim() == model.output_dim, ErrorCode::dimension_mismatch,
            "train: dataset label dimension does not match the model");
    if (cfg.loss == LossKind::va_ccc_mse) {
        require(model.output_dim == 2, ErrorCode::invalid_argument,
                "train: the valence-arousal loss needs exactly 2 outputs");
    }

    const auto train_windows =
        dataio::make_windows(dataset, dataio::Split::train, cfg.seq_len, cfg.seq_len);
    require(!train_windows.empty(), ErrorCode::invalid_argument,
            "train: training split has no usable windows");

    TrainResult result;
    result.model = std::move(model);
    if (cfg.epochs == 0) return result;

    const auto val_windows =
        dataio::make_windows(dataset, dataio::Split::val, cfg.seq_len, cfg.seq_len);
    require(!val_windows.empty(), ErrorCode::invalid_argument,
            "train: validation split has no usable windows");

    AdamState adam_state = AdamState::zeros_like(result.model);
    BiGruParams grads = BiGruParams::zeros(result.model.input_dim, result.model.hidden_dim,
                                           result.model.output_dim);
    BiGruParams best_params = result.model.params;
    double best_score = -std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    std::vector<int> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (int local_epoch = 0; local_epoch < cfg.epochs; ++local_epoch) {
        const int epoch = cfg.epoch_offset + local_epoch;
        const double lr = cosine_warm_restart_lr(epoch, cfg.lr0, cfg.scheduler);
        Rng shuffle_rng(derive_seed(cfg.seed, 0x5450ULL, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::uint64_t forward_counter = 0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(cfg.batch_sequences)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(cfg.batch_sequences));
            const double batch_n = static_cast<double>(batch_end - batch_start);
            grads.set_zero();

            for (std::size_t b = batch_start; b < batch_end; ++b) {
                const auto& w = train_windows[static_cast<std::size_t>(order[b])];
                const auto& record = dataset.sequences[static_cast<std::size_t>(w.sequence_index)];
                ForwardCache cache;
                const Matrix preds = bigru_forward(
                    record.frames.middleRows(w.start, w.length), result.model,
                    /*train_mode=*/true,
                    derive_seed(cfg.seed, 0xDD00ULL, static_cast<std::uint64_t>(epoch),
                                forward_counter++),
                    &cache);
                Matrix d_preds;
                const double loss = loss_with_grad(
                    cfg.loss, preds, record.labels.middleRows(w.start, w.length), d_preds);
                if (!std::isfinite(loss)) {
                    raise(ErrorCode::numeric,
                          "train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", sequence '" + record.id + "', frame " +
                              std::to_string(w.start));
                }
                loss_sum += loss;
                d_preds /= batch_n; // batch loss is the mean over its windows
                add_into(grads, backward(result.model, cache, d_preds));
            }
            adam_step(result.model.params, grads, adam_state, lr, cfg.weight_decay, cfg.adam);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.lr = lr;
        record.train_loss = loss_sum / static_cast<double>(order.size());
        record.validation = evaluate_impl(result.model, dataset, dataio::Split::val,
                                          cfg.seq_len, Pooling::pooled, /*lenient=*/true);
        record.val_score = selection_score(cfg.loss, record.validation);
        result.history.push_back(record);

        if (record.val_score > best_score) {
            best_score = record.val_score;
            best_epoch = epoch;
            best_params = result.model.params;
        }
        if (log_enabled(LogLevel::info)) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "epoch %3d  lr %.3e  train_loss %.6f  val_score %.4f", epoch, lr,
                          record.train_loss, record.val_score);
            log_info(line);
        }
    }

    result.model.params = std::move(best_params);
    result.best_epoch = best_epoch;
    result.best_score = best_score;
    return result;
}

} // namespace affect::temporal
