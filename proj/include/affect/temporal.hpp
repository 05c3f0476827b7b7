/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/temporal.hpp
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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/common.hpp"
#include "affect/dataio.hpp"
#include "affect/json_io.hpp"
#include "affect/metrics.hpp"

namespace affect::temporal {

/**
 * One direction of one GRU layer. Gate convention (reset applied before the
 * candidate, with a separate recurrent candidate bias):
 *
 *   r = sigmoid(w_r x + u_r h + b_r)
 *   z = sigmoid(w_z x + u_z h + b_z)
 *   n = tanh(w_n x + b_n + r .* (u_n h + b_hn))
 *   h' = (1 - z) .* n + z .* h
 */
struct GruDirectionParams {
    Matrix w_r, w_z, w_n; // H x D_in
    Matrix u_r, u_z, u_n; // H x H
    Vector b_r, b_z, b_n, b_hn; // H

    static GruDirectionParams zeros(int input_dim, int hidden_dim);
};

struct GruLayerParams {
    GruDirectionParams fwd;
    GruDirectionParams bwd;
};

/// Every trainable tensor of the regressor; also the container for
/// gradients and Adam moment estimates, which share this shape.
struct BiGruParams {
    GruLayerParams layer1; // input D   -> 2H
    GruLayerParams layer2; // input 2H  -> 2H
    Matrix head_w;         // L x 2H
    Vector head_b;         // L

    static BiGruParams zeros(int input_dim, int hidden_dim, int output_dim);
    void set_zero();
};

struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    bool is_bias;

    Eigen::Index size() const { return rows * cols; }
};

/// Stable, ordered view over all tensors; the single source of truth for
/// initialization order, optimizer iteration, and checkpoint layout.
std::vector<TensorRef> tensor_refs(BiGruParams& params);

/**
 * Bidirectional 2-layer GRU with a per-frame linear head. Dropout is applied
 * to each layer's concatenated output: rate dropout_gru between the layers
 * and dropout_head before the head (inverted scaling, train mode only).
 */
struct BiGruRegressor {
    int input_dim = 0;
    int hidden_dim = 128;
    int output_dim = 2;
    double dropout_gru = 0.5;
    double dropout_head = 0.25;
    BiGruParams params;
};

/// Weights uniform in (-1/sqrt(H), 1/sqrt(H)), biases zero, seeded.
BiGruRegressor make_regressor(int input_dim, int hidden_dim, int output_dim,
                              std::uint64_t seed);

/// Single GRU cell update; the reference form of the gate equations.
Vector gru_cell_forward(const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& h_prev,
                        const GruDirectionParams& params);

struct DirectionCache {
    Matrix states;   // H x T
    Matrix r, z, n;  // H x T gate activations
    Matrix u_hidden; // H x T, u_n h_prev + b_hn
    Matrix h_prev;   // H x T
};

/// Everything backward() needs to replay a forward pass, including the
/// dropout masks that were drawn.
struct ForwardCache {
    int input_dim = 0, hidden_dim = 0, output_dim = 0;
    Eigen::Index n_frames = 0;
    bool train_mode = false;
    Matrix input;            // D x T
    DirectionCache l1_fwd, l1_bwd, l2_fwd, l2_bwd;
    Matrix mask1, mask2;     // 2H x T inverted-dropout masks (ones in eval)
    Matrix layer2_input;     // 2H x T, layer-1 output after dropout
    Matrix head_input;       // 2H x T, layer-2 output after dropout
};

/**
 * Full forward pass over a T x D sequence; returns per-frame outputs T x L.
 * Train mode draws dropout masks from rng_seed (and only from it, so a
 * repeated seed replays the masks exactly); eval mode is deterministic and
 * ignores rng_seed.
 */
Matrix bigru_forward(const Eigen::Ref<const Matrix>& sequence,
                     const BiGruRegressor& model, bool train_mode,
                     std::uint64_t rng_seed, ForwardCache* cache = nullptr);

/// (1 - ccc(valence)) + (1 - ccc(arousal)) + mse over all entries.
double loss_va(const Eigen::Ref<const Matrix>& preds,
               const Eigen::Ref<const Matrix>& targets);

/// Mean squared error over all entries.
double loss_au(const Eigen::Ref<const Matrix>& preds,
               const Eigen::Ref<const Matrix>& targets);

enum class LossKind { va_ccc_mse, au_mse };

/// Loss value plus its gradient with respect to the predictions.
double loss_with_grad(LossKind kind, const Eigen::Ref<const Matrix>& preds,
                      const Eigen::Ref<const Matrix>& targets, Matrix& grad_out);

/**
 * Backpropagation through time. d_outputs is the loss gradient w.r.t. the
 * forward pass's T x L outputs; returns gradients for every parameter.
 * Optionally also produces the gradient w.r.t. the input sequence.
 */
BiGruParams backward(const BiGruRegressor& model, const ForwardCache& cache,
                     const Eigen::Ref<const Matrix>& d_outputs,
                     Matrix* d_input = nullptr);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    BiGruParams m, v;
    long step = 0;

    static AdamState zeros_like(const BiGruRegressor& model);
};

/// Classic Adam with bias correction; weight decay enters as an L2 term
/// added to the gradient before the moment updates.
void adam_step(BiGruParams& params, const BiGruParams& grads, AdamState& state,
               double lr, double weight_decay, const AdamConfig& cfg);

struct SchedulerConfig {
    int t0 = 10;
    int t_mult = 2;
    double eta_min = 1e-6;
};

/// Cosine annealing with warm restarts; returns lr0 at every restart
/// boundary and eta_min at cycle ends.
double cosine_warm_restart_lr(int epoch, double lr0, const SchedulerConfig& cfg);

struct TrainConfig {
    LossKind loss = LossKind::va_ccc_mse;
    double lr0 = 1e-4;
    double weight_decay = 1e-4;
    int batch_sequences = 4;
    int seq_len = 100;
    int epochs = 0;
    int epoch_offset = 0; // resumed runs continue the schedule from here
    AdamConfig adam;
    SchedulerConfig scheduler;
    std::uint64_t seed = 0;

    Json to_json() const;
    static TrainConfig from_json(const Json& j);
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_score = 0.0;
    metrics::MetricsReport validation;
};

struct TrainResult {
    BiGruRegressor model; // parameters of the best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_score = 0.0;
};

/**
 * Deterministic training: per-epoch seeded shuffle of the training windows,
 * mini-batches of batch_sequences windows (loss averaged over the batch),
 * Adam update per batch, scheduler per epoch. After each epoch the model is
 * scored on the validation split (pooled mean CCC for the VA loss, pooled
 * mean ICC for the AU loss) and the best-scoring parameters are returned.
 */
TrainResult train(const dataio::SequenceDataset& dataset, BiGruRegressor model,
                  const TrainConfig& cfg);

enum class Pooling { pooled, per_sequence };

/**
 * Runs the model over the split's windows and reports the full metric suite
 * per label dimension, either pooled over all evaluated frames or averaged
 * over per-sequence metric values.
 */
metrics::MetricsReport evaluate(const BiGruRegressor& model,
                                const dataio::SequenceDataset& dataset,
                                dataio::Split split, int seq_len,
                                Pooling pooling = Pooling::pooled);

/// Mean validation CCC (VA loss) or mean validation ICC (AU loss); the
/// model-selection score used by train().
double selection_score(LossKind kind, const metrics::MetricsReport& report);

void save_checkpoint(const std::filesystem::path& path, const BiGruRegressor& model,
                     const TrainConfig& cfg, int best_epoch, int epochs_trained);

struct Checkpoint {
    BiGruRegressor model;
    TrainConfig config;
    int best_epoch = -1;
    int epochs_trained = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace affect::temporal
