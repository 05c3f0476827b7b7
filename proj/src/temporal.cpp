/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/temporal.cpp
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
#include "affect/temporal.hpp"

#include <cmath>
#include <numbers>

#include "affect/rng.hpp"

namespace affect::temporal {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix dropout_mask(Rng& rng, double rate, Eigen::Index rows, Eigen::Index cols) {
    // Inverted dropout: surviving entries carry 1/(1-rate) so eval needs no
    // rescaling. Fixed row-major draw order makes the mask a pure function
    // of (seed, shape).
    Matrix mask(rows, cols);
    const double keep = 1.0 - rate;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
    }
    return mask;
}

/**
 * One direction over the whole sequence. Input-side projections for all
 * frames are hoisted into three GEMMs; the recurrent part stays sequential.
 * `reverse` processes frames back to front while writing each state at its
 * own time index.
 */
void run_direction(const Matrix& input, const GruDirectionParams& p, bool reverse,
                   DirectionCache& cache) {
    const Eigen::Index t_len = input.cols();
    const Eigen::Index h_dim = p.u_r.rows();

    const Matrix proj_r = p.w_r * input;
    const Matrix proj_z = p.w_z * input;
    const Matrix proj_n = p.w_n * input;

    cache.states.resize(h_dim, t_len);
    cache.r.resize(h_dim, t_len);
    cache.z.resize(h_dim, t_len);
    cache.n.resize(h_dim, t_len);
    cache.u_hidden.resize(h_dim, t_len);
    cache.h_prev.resize(h_dim, t_len);

    Vector h = Vector::Zero(h_dim);
    Vector r(h_dim), z(h_dim), n(h_dim), u(h_dim);
    for (Eigen::Index step = 0; step < t_len; ++step) {
        const Eigen::Index t = reverse ? t_len - 1 - step : step;
        r = (proj_r.col(t) + p.u_r * h + p.b_r).unaryExpr([](double v) { return sigmoid(v); });
        z = (proj_z.col(t) + p.u_z * h + p.b_z).unaryExpr([](double v) { return sigmoid(v); });
        u = p.u_n * h + p.b_hn;
        n = (proj_n.col(t) + p.b_n + r.cwiseProduct(u)).array().tanh();

        cache.r.col(t) = r;
        cache.z.col(t) = z;
        cache.n.col(t) = n;
        cache.u_hidden.col(t) = u;
        cache.h_prev.col(t) = h;

        h = (Vector::Ones(h_dim) - z).cwiseProduct(n) + z.cwiseProduct(h);
        cache.states.col(t) = h;
    }
}

struct DirectionGrads {
    GruDirectionParams params;
    Matrix d_input; // D_in x T
};

/**
 * BPTT through one direction. d_states is the gradient arriving at every
 * emitted state. Per-step work is elementwise plus three transposed matvecs
 * for the recurrent carry; weight gradients become batched GEMMs over the
 * stored per-step gate gradients.
 */
DirectionGrads direction_backward(const Matrix& input, const GruDirectionParams& p,
                                  bool reverse, const DirectionCache& cache,
                                  const Matrix& d_states) {
    const Eigen::Index t_len = input.cols();
    const Eigen::Index h_dim = p.u_r.rows();

    Matrix ga_r(h_dim, t_len), ga_z(h_dim, t_len), ga_n(h_dim, t_len);
    Vector carry = Vector::Zero(h_dim);
    Vector g(h_dim), ar(h_dim), az(h_dim), an(h_dim);

    for (Eigen::Index step = t_len - 1; step >= 0; --step) {
        const Eigen::Index t = reverse ? t_len - 1 - step : step;
        g = d_states.col(t) + carry;

        const auto r = cache.r.col(t).array();
        const auto z = cache.z.col(t).array();
        const auto n = cache.n.col(t).array();
        const auto u = cache.u_hidden.col(t).array();
        const auto h_prev = cache.h_prev.col(t).array();

        az = (g.array() * (h_prev - n) * z * (1.0 - z)).matrix();
        an = (g.array() * (1.0 - z) * (1.0 - n * n)).matrix();
        ar = (an.array() * u * r * (1.0 - r)).matrix();

        ga_r.col(t) = ar;
        ga_z.col(t) = az;
        ga_n.col(t) = an;

        carry = g.cwiseProduct(cache.z.col(t)) + p.u_r.transpose() * ar +
                p.u_z.transpose() * az +
                p.u_n.transpose() * an.cwiseProduct(cache.r.col(t));
    }

    const Matrix ga_n_gated = ga_n.cwiseProduct(cache.r);

    DirectionGrads out;
    out.params.w_r = ga_r * input.transpose();
    out.params.w_z = ga_z * input.transpose();
    out.params.w_n = ga_n * input.transpose();
    out.params.u_r = ga_r * cache.h_prev.transpose();
    out.params.u_z = ga_z * cache.h_prev.transpose();
    out.params.u_n = ga_n_gated * cache.h_prev.transpose();
    out.params.b_r = ga_r.rowwise().sum();
    out.params.b_z = ga_z.rowwise().sum();
    out.params.b_n = ga_n.rowwise().sum();
    out.params.b_hn = ga_n_gated.rowwise().sum();
    out.d_input = p.w_r.transpose() * ga_r + p.w_z.transpose() * ga_z +
                  p.w_n.transpose() * ga_n;
    return out;
}

void check_loss_pair(const Eigen::Ref<const Matrix>& preds,
                     const Eigen::Ref<const Matrix>& targets, const char* op,
                     Eigen::Index min_frames) {
    require(preds.rows() == targets.rows() && preds.cols() == targets.cols(),
            ErrorCode::dimension_mismatch,
            std::string(op) + ": prediction/target shape mismatch");
    require(preds.rows() >= min_frames, ErrorCode::invalid_argument,
            std::string(op) + ": needs at least " + std::to_string(min_frames) + " frames");
    require_finite(preds, std::string(op) + " predictions");
    require_finite(targets, std::string(op) + " targets");
}

/// d(ccc)/d(prediction) for one dimension; zero when the ccc denominator
/// degenerates (both series constant and equal).
Vector ccc_grad(const Eigen::Ref<const Vector>& target,
                const Eigen::Ref<const Vector>& pred) {
    const auto n = static_cast<double>(target.size());
    const double mean_t = target.mean();
    const double mean_p = pred.mean();
    const Eigen::ArrayXd dt = target.array() - mean_t;
    const Eigen::ArrayXd dp = pred.array() - mean_p;
    const double var_t = dt.square().sum() / n;
    const double var_p = dp.square().sum() / n;
    const double cov = (dt * dp).sum() / n;
    const double gap = mean_t - mean_p;
    const double denom = gap * gap + var_t + var_p;
    if (denom == 0.0) return Vector::Zero(target.size());
    const double value = 2.0 * cov / denom;
    const Eigen::ArrayXd d_num = 2.0 * dt / n;
    const Eigen::ArrayXd d_den = 2.0 * dp / n - 2.0 * gap / n;
    return ((d_num - value * d_den) / denom).matrix();
}

} // namespace

GruDirectionParams GruDirectionParams::zeros(int input_dim, int hidden_dim) {
    GruDirectionParams p;
    p.w_r = Matrix::Zero(hidden_dim, input_dim);
    p.w_z = Matrix::Zero(hidden_dim, input_dim);
    p.w_n = Matrix::Zero(hidden_dim, input_dim);
    p.u_r = Matrix::Zero(hidden_dim, hidden_dim);
    p.u_z = Matrix::Zero(hidden_dim, hidden_dim);
    p.u_n = Matrix::Zero(hidden_dim, hidden_dim);
    p.b_r = Vector::Zero(hidden_dim);
    p.b_z = Vector::Zero(hidden_dim);
    p.b_n = Vector::Zero(hidden_dim);
    p.b_hn = Vector::Zero(hidden_dim);
    return p;
}

BiGruParams BiGruParams::zeros(int input_dim, int hidden_dim, int output_dim) {
    BiGruParams p;
    p.layer1.fwd = GruDirectionParams::zeros(input_dim, hidden_dim);
    p.layer1.bwd = GruDirectionParams::zeros(input_dim, hidden_dim);
    p.layer2.fwd = GruDirectionParams::zeros(2 * hidden_dim, hidden_dim);
    p.layer2.bwd = GruDirectionParams::zeros(2 * hidden_dim, hidden_dim);
    p.head_w = Matrix::Zero(output_dim, 2 * hidden_dim);
    p.head_b = Vector::Zero(output_dim);
    return p;
}

void BiGruParams::set_zero() {
    for (TensorRef& ref : tensor_refs(*this)) {
        Eigen::Map<Vector>(ref.data, ref.size()).setZero();
    }
}

namespace {

void append_direction_refs(std::vector<TensorRef>& refs, const std::string& prefix,
                           GruDirectionParams& p) {
    auto add_m = [&](const char* name, Matrix& m) {
        refs.push_back({prefix + name, m.data(), m.rows(), m.cols(), false});
    };
    auto add_v = [&](const char* name, Vector& v) {
        refs.push_back({prefix + name, v.data(), v.size(), 1, true});
    };
    add_m("w_r", p.w_r);
    add_m("w_z", p.w_z);
    add_m("w_n", p.w_n);
    add_m("u_r", p.u_r);
    add_m("u_z", p.u_z);
    add_m("u_n", p.u_n);
    add_v("b_r", p.b_r);
    add_v("b_z", p.b_z);
    add_v("b_n", p.b_n);
    add_v("b_hn", p.b_hn);
}

} // namespace

std::vector<TensorRef> tensor_refs(BiGruParams& params) {
    std::vector<TensorRef> refs;
    refs.reserve(42);
    append_direction_refs(refs, "layer1.fwd.", params.layer1.fwd);
    append_direction_refs(refs, "layer1.bwd.", params.layer1.bwd);
    append_direction_refs(refs, "layer2.fwd.", params.layer2.fwd);
    append_direction_refs(refs, "layer2.bwd.", params.layer2.bwd);
    refs.push_back({"head.w", params.head_w.data(), params.head_w.rows(),
                    params.head_w.cols(), false});
    refs.push_back({"head.b", params.head_b.data(), params.head_b.size(), 1, true});
    return refs;
}

BiGruRegressor make_regressor(int input_dim, int hidden_dim, int output_dim,
                              std::uint64_t seed) {
    require(input_dim >= 1 && hidden_dim >= 1 && output_dim >= 1,
            ErrorCode::invalid_argument, "make_regressor: dimensions must be positive");
    BiGruRegressor model;
    model.input_dim = input_dim;
    model.hidden_dim = hidden_dim;
    model.output_dim = output_dim;
    model.params = BiGruParams::zeros(input_dim, hidden_dim, output_dim);

    Rng rng(derive_seed(seed, 0x1417ULL));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (TensorRef& ref : tensor_refs(model.params)) {
        if (ref.is_bias) continue;
        double* p = ref.data;
        for (Eigen::Index i = 0; i < ref.size(); ++i) p[i] = rng.uniform(-bound, bound);
    }
    return model;
}

Vector gru_cell_forward(const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& h_prev,
                        const GruDirectionParams& params) {
    require(x.size() == params.w_r.cols(), ErrorCode::dimension_mismatch,
            "gru_cell_forward: input size mismatch");
    require(h_prev.size() == params.u_r.rows(), ErrorCode::dimension_mismatch,
            "gru_cell_forward: hidden state size mismatch");
    const Vector r = (params.w_r * x + params.u_r * h_prev + params.b_r)
                         .unaryExpr([](double v) { return sigmoid(v); });
    const Vector z = (params.w_z * x + params.u_z * h_prev + params.b_z)
                         .unaryExpr([](double v) { return sigmoid(v); });
    const Vector n = (params.w_n * x + params.b_n +
                      r.cwiseProduct(params.u_n * h_prev + params.b_hn))
                         .array()
                         .tanh();
    return (Vector::Ones(h_prev.size()) - z).cwiseProduct(n) + z.cwiseProduct(h_prev);
}

Matrix bigru_forward(const Eigen::Ref<const Matrix>& sequence,
                     const BiGruRegressor& model, bool train_mode,
                     std::uint64_t rng_seed, ForwardCache* cache) {
    const Eigen::Index t_len = sequence.rows();
    require(t_len >= 1, ErrorCode::invalid_argument, "bigru_forward: empty sequence");
    require(sequence.cols() == model.input_dim, ErrorCode::dimension_mismatch,
            "bigru_forward: sequence feature dimension " + std::to_string(sequence.cols()) +
                " does not match model input dimension " + std::to_string(model.input_dim));
    require_finite(sequence, "bigru_forward sequence");

    const Eigen::Index h2 = 2 * model.hidden_dim;
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c.input_dim = model.input_dim;
    c.hidden_dim = model.hidden_dim;
    c.output_dim = model.output_dim;
    c.n_frames = t_len;
    c.train_mode = train_mode;
    c.input = sequence.transpose(); // D x T

    run_direction(c.input, model.params.layer1.fwd, false, c.l1_fwd);
    run_direction(c.input, model.params.layer1.bwd, true, c.l1_bwd);

    Matrix concat1(h2, t_len);
    concat1.topRows(model.hidden_dim) = c.l1_fwd.states;
    concat1.bottomRows(model.hidden_dim) = c.l1_bwd.states;

    if (train_mode) {
        Rng rng(derive_seed(rng_seed, 0xD120ULL));
        c.mask1 = dropout_mask(rng, model.dropout_gru, h2, t_len);
        c.layer2_input = concat1.cwiseProduct(c.mask1);
    } else {
        c.mask1 = Matrix::Ones(h2, t_len);
        c.layer2_input = concat1;
    }

    run_direction(c.layer2_input, model.params.layer2.fwd, false, c.l2_fwd);
    run_direction(c.layer2_input, model.params.layer2.bwd, true, c.l2_bwd);

    Matrix concat2(h2, t_len);
    concat2.topRows(model.hidden_dim) = c.l2_fwd.states;
    concat2.bottomRows(model.hidden_dim) = c.l2_bwd.states;

    if (train_mode) {
        Rng rng(derive_seed(rng_seed, 0xD220ULL));
        c.mask2 = dropout_mask(rng, model.dropout_head, h2, t_len);
        c.head_input = concat2.cwiseProduct(c.mask2);
    } else {
        c.mask2 = Matrix::Ones(h2, t_len);
        c.head_input = concat2;
    }

    Matrix outputs = model.params.head_w * c.head_input; // L x T
    outputs.colwise() += model.params.head_b;
    return outputs.transpose(); // T x L
}

double loss_va(const Eigen::Ref<const Matrix>& preds,
               const Eigen::Ref<const Matrix>& targets) {
    check_loss_pair(preds, targets, "loss_va", 2);
    require(preds.cols() == 2, ErrorCode::dimension_mismatch,
            "loss_va: expects 2 output dimensions (valence, arousal)");
    double loss = 0.0;
    for (Eigen::Index dim = 0; dim < 2; ++dim) {
        const Vector t = targets.col(dim);
        const Vector p = preds.col(dim);
        loss += 1.0 - metrics::ccc({t.data(), static_cast<std::size_t>(t.size())},
                                   {p.data(), static_cast<std::size_t>(p.size())});
    }
    loss += (preds - targets).squaredNorm() / static_cast<double>(preds.size());
    return loss;
}

double loss_au(const Eigen::Ref<const Matrix>& preds,
               const Eigen::Ref<const Matrix>& targets) {
    check_loss_pair(preds, targets, "loss_au", 1);
    return (preds - targets).squaredNorm() / static_cast<double>(preds.size());
}

double loss_with_grad(LossKind kind, const Eigen::Ref<const Matrix>& preds,
                      const Eigen::Ref<const Matrix>& targets, Matrix& grad_out) {
    grad_out = 2.0 * (preds - targets) / static_cast<double>(preds.size());
    if (kind == LossKind::au_mse) {
        return loss_au(preds, targets);
    }
    const double loss = loss_va(preds, targets);
    for (Eigen::Index dim = 0; dim < 2; ++dim) {
        grad_out.col(dim) -= ccc_grad(targets.col(dim), preds.col(dim));
    }
    return loss;
}

BiGruParams backward(const BiGruRegressor& model, const ForwardCache& cache,
                     const Eigen::Ref<const Matrix>& d_outputs, Matrix* d_input) {
    require(cache.input_dim == model.input_dim && cache.hidden_dim == model.hidden_dim &&
                cache.output_dim == model.output_dim && cache.n_frames >= 1,
            ErrorCode::invalid_argument,
            "backward: cache does not match the model (stale cache?)");
    require(d_outputs.rows() == cache.n_frames && d_outputs.cols() == model.output_dim,
            ErrorCode::dimension_mismatch, "backward: d_outputs shape mismatch");

    const Eigen::Index h_dim = model.hidden_dim;
    BiGruParams grads;

    const Matrix d_out = d_outputs.transpose(); // L x T
    grads.head_w = d_out * cache.head_input.transpose();
    grads.head_b = d_out.rowwise().sum();

    const Matrix d_concat2 =
        (model.params.head_w.transpose() * d_out).cwiseProduct(cache.mask2);

    DirectionGrads g2f = direction_backward(cache.layer2_input, model.params.layer2.fwd,
                                            false, cache.l2_fwd, d_concat2.topRows(h_dim));
    DirectionGrads g2b = direction_backward(cache.layer2_input, model.params.layer2.bwd,
                                            true, cache.l2_bwd, d_concat2.bottomRows(h_dim));
    grads.layer2.fwd = std::move(g2f.params);
    grads.layer2.bwd = std::move(g2b.params);

    const Matrix d_concat1 = (g2f.d_input + g2b.d_input).cwiseProduct(cache.mask1);

    DirectionGrads g1f = direction_backward(cache.input, model.params.layer1.fwd, false,
                                            cache.l1_fwd, d_concat1.topRows(h_dim));
    DirectionGrads g1b = direction_backward(cache.input, model.params.layer1.bwd, true,
                                            cache.l1_bwd, d_concat1.bottomRows(h_dim));
    grads.layer1.fwd = std::move(g1f.params);
    grads.layer1.bwd = std::move(g1b.params);

    if (d_input != nullptr) {
        *d_input = (g1f.d_input + g1b.d_input).transpose(); // T x D
    }
    return grads;
}

AdamState AdamState::zeros_like(const BiGruRegressor& model) {
    AdamState state;
    state.m = BiGruParams::zeros(model.input_dim, model.hidden_dim, model.output_dim);
    state.v = BiGruParams::zeros(model.input_dim, model.hidden_dim, model.output_dim);
    state.step = 0;
    return state;
}

void adam_step(BiGruParams& params, const BiGruParams& grads, AdamState& state,
               double lr, double weight_decay, const AdamConfig& cfg) {
    state.step += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    auto param_refs = tensor_refs(params);
    auto grad_refs = tensor_refs(const_cast<BiGruParams&>(grads));
    auto m_refs = tensor_refs(state.m);
    auto v_refs = tensor_refs(state.v);

    for (std::size_t i = 0; i < param_refs.size(); ++i) {
        require(param_refs[i].size() == grad_refs[i].size() &&
                    param_refs[i].size() == m_refs[i].size(),
                ErrorCode::dimension_mismatch,
                "adam_step: tensor shape mismatch at " + param_refs[i].name);
        Eigen::Map<Eigen::ArrayXd> p(param_refs[i].data, param_refs[i].size());
        Eigen::Map<const Eigen::ArrayXd> g_raw(grad_refs[i].data, grad_refs[i].size());
        Eigen::Map<Eigen::ArrayXd> m(m_refs[i].data, m_refs[i].size());
        Eigen::Map<Eigen::ArrayXd> v(v_refs[i].data, v_refs[i].size());

        const Eigen::ArrayXd g = g_raw + weight_decay * p;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
        p -= lr * (m / bias1) / ((v / bias2).sqrt() + cfg.epsilon);
    }
}

double cosine_warm_restart_lr(int epoch, double lr0, const SchedulerConfig& cfg) {
    require(epoch >= 0, ErrorCode::invalid_argument, "scheduler: epoch must be >= 0");
    require(cfg.t0 >= 1 && cfg.t_mult >= 1, ErrorCode::invalid_argument,
            "scheduler: t0 and t_mult must be >= 1");
    long period = cfg.t0;
    long t_cur = epoch;
    while (t_cur >= period) {
        t_cur -= period;
        period *= cfg.t_mult;
    }
    const double progress = static_cast<double>(t_cur) / static_cast<double>(period);
    return cfg.eta_min +
           0.5 * (lr0 - cfg.eta_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

Json TrainConfig::to_json() const {
    Json j;
    j["loss"] = loss == LossKind::va_ccc_mse ? "va_ccc_mse" : "au_mse";
    j["lr0"] = lr0;
    j["weight_decay"] = weight_decay;
    j["batch_sequences"] = batch_sequences;
    j["seq_len"] = seq_len;
    j["epochs"] = epochs;
    j["epoch_offset"] = epoch_offset;
    j["adam"] = {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}};
    j["scheduler"] = {{"t0", scheduler.t0},
                      {"t_mult", scheduler.t_mult},
                      {"eta_min", scheduler.eta_min}};
    j["seed"] = seed;
    return j;
}

TrainConfig TrainConfig::from_json(const Json& j) {
    TrainConfig cfg;
    const std::string loss = j.value("loss", "va_ccc_mse");
    if (loss == "va_ccc_mse") cfg.loss = LossKind::va_ccc_mse;
    else if (loss == "au_mse") cfg.loss = LossKind::au_mse;
    else raise(ErrorCode::parse, "TrainConfig: unknown loss '" + loss + "'");
    cfg.lr0 = j.value("lr0", cfg.lr0);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.batch_sequences = j.value("batch_sequences", cfg.batch_sequences);
    cfg.seq_len = j.value("seq_len", cfg.seq_len);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.epoch_offset = j.value("epoch_offset", cfg.epoch_offset);
    if (j.contains("adam")) {
        cfg.adam.beta1 = j["adam"].value("beta1", cfg.adam.beta1);
        cfg.adam.beta2 = j["adam"].value("beta2", cfg.adam.beta2);
        cfg.adam.epsilon = j["adam"].value("epsilon", cfg.adam.epsilon);
    }
    if (j.contains("scheduler")) {
        cfg.scheduler.t0 = j["scheduler"].value("t0", cfg.scheduler.t0);
        cfg.scheduler.t_mult = j["scheduler"].value("t_mult", cfg.scheduler.t_mult);
        cfg.scheduler.eta_min = j["scheduler"].value("eta_min", cfg.scheduler.eta_min);
    }
    cfg.seed = j.value("seed", cfg.seed);
    require(cfg.lr0 > 0 && cfg.weight_decay >= 0 && cfg.batch_sequences >= 1 &&
                cfg.seq_len >= 2 && cfg.epochs >= 0,
            ErrorCode::invalid_argument, "TrainConfig: invalid values");
    return cfg;
}

void save_checkpoint(const std::filesystem::path& path, const BiGruRegressor& model,
                     const TrainConfig& cfg, int best_epoch, int epochs_trained) {
    Json j;
    j["format"] = "affectlab-checkpoint-v1";
    j["config"] = cfg.to_json();
    j["best_epoch"] = best_epoch;
    j["epochs_trained"] = epochs_trained;
    Json m;
    m["input_dim"] = model.input_dim;
    m["hidden_dim"] = model.hidden_dim;
    m["output_dim"] = model.output_dim;
    m["dropout_gru"] = model.dropout_gru;
    m["dropout_head"] = model.dropout_head;
    Json tensors = Json::object();
    for (TensorRef& ref : tensor_refs(const_cast<BiGruParams&>(model.params))) {
        Json t;
        t["shape"] = {ref.rows, ref.cols};
        // Row-major on disk regardless of in-memory layout.
        Eigen::Map<const Matrix> view(ref.data, ref.rows, ref.cols);
        Json data = Json::array();
        for (Eigen::Index r = 0; r < ref.rows; ++r)
            for (Eigen::Index col = 0; col < ref.cols; ++col) data.push_back(view(r, col));
        t["data"] = std::move(data);
        tensors[ref.name] = std::move(t);
    }
    m["tensors"] = std::move(tensors);
    j["model"] = std::move(m);
    write_json_file(path, j);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    require(j.value("format", "") == "affectlab-checkpoint-v1", ErrorCode::parse,
            path.string() + ": not an affectlab checkpoint");
    Checkpoint ckpt;
    ckpt.config = TrainConfig::from_json(j.at("config"));
    ckpt.best_epoch = j.at("best_epoch").get<int>();
    ckpt.epochs_trained = j.at("epochs_trained").get<int>();

    const Json& m = j.at("model");
    BiGruRegressor& model = ckpt.model;
    model.input_dim = m.at("input_dim").get<int>();
    model.hidden_dim = m.at("hidden_dim").get<int>();
    model.output_dim = m.at("output_dim").get<int>();
    model.dropout_gru = m.at("dropout_gru").get<double>();
    model.dropout_head = m.at("dropout_head").get<double>();
    model.params = BiGruParams::zeros(model.input_dim, model.hidden_dim, model.output_dim);
    const Json& tensors = m.at("tensors");
    for (TensorRef& ref : tensor_refs(model.params)) {
        require(tensors.contains(ref.name), ErrorCode::parse,
                path.string() + ": checkpoint is missing tensor " + ref.name);
        const Json& t = tensors.at(ref.name);
        require(t.at("shape")[0].get<Eigen::Index>() == ref.rows &&
                    t.at("shape")[1].get<Eigen::Index>() == ref.cols,
                ErrorCode::parse, path.string() + ": shape mismatch for " + ref.name);
        const Json& data = t.at("data");
        require(static_cast<Eigen::Index>(data.size()) == ref.size(), ErrorCode::parse,
                path.string() + ": size mismatch for " + ref.name);
        Eigen::Map<Matrix> view(ref.data, ref.rows, ref.cols);
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < ref.rows; ++r)
            for (Eigen::Index col = 0; col < ref.cols; ++col) view(r, col) = data[i++].get<double>();
    }
    return ckpt;
}

} // namespace affect::temporal
