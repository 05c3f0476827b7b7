/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: tools/affectlab.cpp
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
 * Command-line front end. Subcommands assemble a JSON config (an optional
 * --config file first, then explicit flags on top, flags win) and hand it to
 * the shared library through the C API.
 */
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "affect/affect.h"

namespace {

using Json = nlohmann::ordered_json;

/// Accumulates the resolved config: file first, explicit flags on top.
class ConfigBuilder {
  public:
    void load_file(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in.good()) {
            throw CLI::ValidationError("--config", "cannot open " + path);
        }
        try {
            config_ = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw CLI::ValidationError("--config", path + ": " + e.what());
        }
    }

    template <typename T>
    void set_if(const CLI::Option* opt, const char* key, const T& value) {
        if (opt != nullptr && opt->count() > 0) config_[key] = value;
    }

    template <typename T>
    void set_nested_if(const CLI::Option* opt, const char* group, const char* key,
                       const T& value) {
        if (opt != nullptr && opt->count() > 0) config_[group][key] = value;
    }

    template <typename T>
    void set_nested2_if(const CLI::Option* opt, const char* group, const char* subgroup,
                        const char* key, const T& value) {
        if (opt != nullptr && opt->count() > 0) config_[group][subgroup][key] = value;
    }

    template <typename T>
    void set(const char* key, const T& value) { config_[key] = value; }

    std::string dump() const { return config_.dump(); }

  private:
    Json config_ = Json::object();
};

int finish(affect_status status) {
    if (status != AFFECT_OK) {
        std::fprintf(stderr, "affectlab: error (%s): %s\n", affect_status_name(status),
                     affect_last_error());
    }
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("affectlab ") + affect_version() +
                 " - video-based affect analysis from 3D face shape coefficients"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ---- synth ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "synth", "Generate a synthetic dataset (toy 3DMM + labelled sequences)");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto task = std::make_shared<std::string>("va");
        auto out = std::make_shared<std::string>();
        auto seed = std::make_shared<uint64_t>(0);
        auto sequences = std::make_shared<int>(12);
        auto frames = std::make_shared<int>(200);
        auto vertices = std::make_shared<int>(34);
        auto k_id = std::make_shared<int>(10);
        auto k_ex = std::make_shared<int>(10);
        auto label_scale = std::make_shared<double>(1.0);
        auto noise_sigma = std::make_shared<double>(0.01);
        auto action_units = std::make_shared<int>(5);
        auto classes = std::make_shared<int>(6);
        auto per_class = std::make_shared<int>(40);
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_task = cmd->add_option("--task", *task, "va | au | emo | landmarks")
                           ->check(CLI::IsMember({"va", "au", "emo", "landmarks"}));
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_seed = cmd->add_option("--seed", *seed, "master seed");
        auto* o_seq = cmd->add_option("--sequences", *sequences, "number of sequences");
        auto* o_frames = cmd->add_option("--frames", *frames, "frames per sequence");
        auto* o_vertices = cmd->add_option("--vertices", *vertices, "toy model vertices");
        auto* o_kid = cmd->add_option("--k-id", *k_id, "identity basis size");
        auto* o_kex = cmd->add_option("--k-ex", *k_ex, "expression basis size");
        auto* o_scale = cmd->add_option("--label-scale", *label_scale,
                                        "scales the VA generator mapping");
        auto* o_noise = cmd->add_option("--noise-sigma", *noise_sigma, "VA label noise");
        auto* o_aus = cmd->add_option("--action-units", *action_units, "AU label count");
        auto* o_classes = cmd->add_option("--classes", *classes, "emo class count");
        auto* o_per = cmd->add_option("--per-class", *per_class, "emo samples per class");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_task, "task", *task);
            state->set_if(o_out, "out", *out);
            state->set_if(o_seed, "seed", *seed);
            state->set_if(o_seq, "sequences", *sequences);
            state->set_if(o_frames, "frames", *frames);
            state->set_if(o_vertices, "vertices", *vertices);
            state->set_if(o_kid, "k_id", *k_id);
            state->set_if(o_kex, "k_ex", *k_ex);
            state->set_if(o_scale, "label_scale", *label_scale);
            state->set_if(o_noise, "noise_sigma", *noise_sigma);
            state->set_if(o_aus, "action_units", *action_units);
            state->set_if(o_classes, "classes", *classes);
            state->set_if(o_per, "per_class", *per_class);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_synth(state->dump().c_str()));
        });
    }

    // ---- fit-pca ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "fit-pca", "Fit a PCA compressor to a dataset's expression coefficients");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto manifest = std::make_shared<std::string>();
        auto components = std::make_shared<int>(3);
        auto split = std::make_shared<std::string>("train");
        auto out = std::make_shared<std::string>();
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_manifest = cmd->add_option("--manifest", *manifest, "dataset manifest.json");
        auto* o_components = cmd->add_option("--components", *components, "kept components");
        auto* o_split = cmd->add_option("--split", *split, "train | val | test | all");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_manifest, "manifest", *manifest);
            state->set_if(o_components, "components", *components);
            state->set_if(o_split, "split", *split);
            state->set_if(o_out, "out", *out);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_fit_pca(state->dump().c_str()));
        });
    }

    // ---- train ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("train", "Train the bidirectional GRU regressor");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto manifest = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto resume = std::make_shared<std::string>();
        auto hidden = std::make_shared<int>(128);
        auto seed = std::make_shared<uint64_t>(0);
        auto loss = std::make_shared<std::string>("va_ccc_mse");
        auto lr0 = std::make_shared<double>(1e-4);
        auto weight_decay = std::make_shared<double>(1e-4);
        auto batch_sequences = std::make_shared<int>(4);
        auto seq_len = std::make_shared<int>(100);
        auto epochs = std::make_shared<int>(0);
        auto t0 = std::make_shared<int>(10);
        auto t_mult = std::make_shared<int>(2);
        auto eta_min = std::make_shared<double>(1e-6);
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_manifest = cmd->add_option("--manifest", *manifest, "dataset manifest.json");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_resume = cmd->add_option("--resume", *resume,
                                         "checkpoint to continue from (trains --epochs more)");
        auto* o_hidden = cmd->add_option("--hidden", *hidden, "GRU hidden size per direction");
        auto* o_seed = cmd->add_option("--seed", *seed, "master seed");
        auto* o_loss = cmd->add_option("--loss", *loss, "va_ccc_mse | au_mse")
                           ->check(CLI::IsMember({"va_ccc_mse", "au_mse"}));
        auto* o_lr0 = cmd->add_option("--lr0", *lr0, "initial learning rate");
        auto* o_wd = cmd->add_option("--weight-decay", *weight_decay, "L2 weight decay");
        auto* o_batch = cmd->add_option("--batch-sequences", *batch_sequences,
                                        "windows per mini-batch");
        auto* o_seqlen = cmd->add_option("--seq-len", *seq_len, "frames per window");
        auto* o_epochs = cmd->add_option("--epochs", *epochs, "training epochs");
        auto* o_t0 = cmd->add_option("--t0", *t0, "scheduler: first restart period");
        auto* o_tmult = cmd->add_option("--t-mult", *t_mult, "scheduler: period multiplier");
        auto* o_etamin = cmd->add_option("--eta-min", *eta_min, "scheduler: minimum lr");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_manifest, "manifest", *manifest);
            state->set_if(o_out, "out", *out);
            state->set_if(o_resume, "resume", *resume);
            state->set_if(o_hidden, "hidden", *hidden);
            state->set_if(o_seed, "seed", *seed);
            state->set_nested_if(o_loss, "train", "loss", *loss);
            state->set_nested_if(o_lr0, "train", "lr0", *lr0);
            state->set_nested_if(o_wd, "train", "weight_decay", *weight_decay);
            state->set_nested_if(o_batch, "train", "batch_sequences", *batch_sequences);
            state->set_nested_if(o_seqlen, "train", "seq_len", *seq_len);
            state->set_nested_if(o_epochs, "train", "epochs", *epochs);
            state->set_nested2_if(o_t0, "train", "scheduler", "t0", *t0);
            state->set_nested2_if(o_tmult, "train", "scheduler", "t_mult", *t_mult);
            state->set_nested2_if(o_etamin, "train", "scheduler", "eta_min", *eta_min);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_train(state->dump().c_str()));
        });
    }

    // ---- eval ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto manifest = std::make_shared<std::string>();
        auto checkpoint = std::make_shared<std::string>();
        auto split = std::make_shared<std::string>("val");
        auto pooling = std::make_shared<std::string>("pooled");
        auto seq_len = std::make_shared<int>(100);
        auto out = std::make_shared<std::string>();
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_manifest = cmd->add_option("--manifest", *manifest, "dataset manifest.json");
        auto* o_ckpt = cmd->add_option("--checkpoint", *checkpoint, "checkpoint.json");
        auto* o_split = cmd->add_option("--split", *split, "train | val | test");
        auto* o_pooling = cmd->add_option("--pooling", *pooling, "pooled | per_sequence")
                              ->check(CLI::IsMember({"pooled", "per_sequence"}));
        auto* o_seqlen = cmd->add_option("--seq-len", *seq_len,
                                         "frames per window (default: checkpoint's)");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_manifest, "manifest", *manifest);
            state->set_if(o_ckpt, "checkpoint", *checkpoint);
            state->set_if(o_split, "split", *split);
            state->set_if(o_pooling, "pooling", *pooling);
            state->set_if(o_seqlen, "seq_len", *seq_len);
            state->set_if(o_out, "out", *out);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_eval(state->dump().c_str()));
        });
    }

    // ---- analyze-corr ---------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "analyze-corr",
            "Linear-regression correspondence panels (labels on feature intensities)");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto mode = std::make_shared<std::string>("va");
        auto manifest = std::make_shared<std::string>();
        auto table = std::make_shared<std::string>();
        auto split = std::make_shared<std::string>("all");
        auto standardize = std::make_shared<bool>(false);
        auto out = std::make_shared<std::string>();
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_mode = cmd->add_option("--mode", *mode, "va | emotions")
                           ->check(CLI::IsMember({"va", "emotions"}));
        auto* o_manifest = cmd->add_option("--manifest", *manifest,
                                           "dataset manifest.json (va mode)");
        auto* o_table = cmd->add_option("--table", *table,
                                        "feature table CSV (emotions mode)");
        auto* o_split = cmd->add_option("--split", *split, "train | val | test | all");
        auto* o_std = cmd->add_flag("--standardize", *standardize,
                                    "standardize features before the fit");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_mode, "mode", *mode);
            state->set_if(o_manifest, "manifest", *manifest);
            state->set_if(o_table, "table", *table);
            state->set_if(o_split, "split", *split);
            state->set_if(o_std, "standardize", *standardize);
            state->set_if(o_out, "out", *out);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_analyze_corr(state->dump().c_str()));
        });
    }

    // ---- knn-eval ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "knn-eval", "Leave-one-out kNN classification of a labelled feature table");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto table = std::make_shared<std::string>();
        auto k = std::make_shared<int>(5);
        auto normalize = std::make_shared<bool>(false);
        auto q_lo = std::make_shared<double>(0.25);
        auto q_hi = std::make_shared<double>(0.75);
        auto out = std::make_shared<std::string>();
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_table = cmd->add_option("--table", *table, "feature table CSV");
        auto* o_k = cmd->add_option("--k", *k, "neighbour count");
        auto* o_norm = cmd->add_flag("--quantile-normalize", *normalize,
                                     "apply quantile-range normalization first");
        auto* o_qlo = cmd->add_option("--q-lo", *q_lo, "lower quantile");
        auto* o_qhi = cmd->add_option("--q-hi", *q_hi, "upper quantile");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_table, "table", *table);
            state->set_if(o_k, "k", *k);
            state->set_if(o_norm, "quantile_normalize", *normalize);
            state->set_if(o_qlo, "q_lo", *q_lo);
            state->set_if(o_qhi, "q_hi", *q_hi);
            state->set_if(o_out, "out", *out);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_knn_eval(state->dump().c_str()));
        });
    }

    // ---- fit-3dmm -----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "fit-3dmm", "Recover pose and shape coefficients from 2D landmarks");
        auto state = std::make_shared<ConfigBuilder>();
        auto config_path = std::make_shared<std::string>();
        auto model = std::make_shared<std::string>();
        auto landmarks = std::make_shared<std::string>();
        auto iters = std::make_shared<int>(50);
        auto out = std::make_shared<std::string>();
        auto force = std::make_shared<bool>(false);

        cmd->add_option("--config", *config_path, "JSON config file (flags override it)");
        auto* o_model = cmd->add_option("--model", *model, "morphable model JSON");
        auto* o_lm = cmd->add_option("--landmarks", *landmarks, "landmarks CSV (x,y)");
        auto* o_iters = cmd->add_option("--iters", *iters, "alternation iterations");
        auto* o_out = cmd->add_option("--out", *out, "output directory");
        auto* o_force = cmd->add_flag("--force", *force, "replace an existing output dir");

        cmd->callback([=, &exit_code] {
            state->load_file(*config_path);
            state->set_if(o_model, "model", *model);
            state->set_if(o_lm, "landmarks", *landmarks);
            state->set_if(o_iters, "iters", *iters);
            state->set_if(o_out, "out", *out);
            state->set_if(o_force, "force", *force);
            exit_code = finish(affect_run_fit_3dmm(state->dump().c_str()));
        });
    }

    CLI11_PARSE(app, argc, argv);
    return exit_code;
}
