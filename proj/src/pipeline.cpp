/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/pipeline.cpp
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
#include "affect/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <Eigen/Geometry>

#include "affect/analysis.hpp"
#include "affect/dataio.hpp"
#include "affect/face3dmm.hpp"
#include "affect/features.hpp"
#include "affect/log.hpp"
#include "affect/metrics.hpp"
#include "affect/rng.hpp"
#include "affect/temporal.hpp"

namespace affect::pipeline {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const char* command) {
    require(j.is_object(), ErrorCode::parse,
            std::string(command) + ": config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        require(allowed.contains(key), ErrorCode::parse,
                std::string(command) + ": unknown config key '" + key + "'");
    }
}

std::string require_string(const Json& j, const char* key, const char* command) {
    require(j.contains(key), ErrorCode::parse,
            std::string(command) + ": missing required key '" + key + "'");
    require(j.at(key).is_string(), ErrorCode::parse,
            std::string(command) + ": '" + std::string(key) + "' must be a string");
    return j.at(key).get<std::string>();
}

/// Stages every output under <out>.staging and renames on success; the
/// destructor cleans up anything left behind by a failure.
class OutputStage {
  public:
    OutputStage(const fs::path& out, bool force) : final_(out), force_(force) {
        require(!out.empty(), ErrorCode::invalid_argument, "output directory must be named");
        if (fs::exists(final_) && !force_) {
            raise(ErrorCode::io, "output directory " + final_.string() +
                                     " already exists (use force to replace)");
        }
        staging_ = final_;
        staging_ += ".staging";
        fs::remove_all(staging_);
        if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
        fs::create_directories(staging_);
    }

    ~OutputStage() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }

    const fs::path& dir() const { return staging_; }

    void commit() {
        if (fs::exists(final_)) {
            require(force_, ErrorCode::io,
                    "output directory " + final_.string() + " already exists");
            fs::remove_all(final_);
        }
        fs::rename(staging_, final_);
        committed_ = true;
    }

  private:
    fs::path final_;
    fs::path staging_;
    bool force_ = false;
    bool committed_ = false;
};

struct RunLog {
    std::string command;
    Json resolved = Json::object();
    Json inputs = Json::object();
    Json warnings = Json::array();

    void add_input(const fs::path& path) { inputs[path.string()] = file_digest(path); }

    void warn(const std::string& message) {
        warnings.push_back(message);
        log_line(LogLevel::error, "warning: " + message);
    }

    void write(const fs::path& directory) const {
        Json j;
        j["command"] = command;
        j["version"] = version_string();
        j["config"] = resolved;
        j["inputs"] = inputs;
        j["warnings"] = warnings;
        write_json_file(directory / "run.json", j);
    }
};

Matrix stacked_frames(const dataio::SequenceDataset& dataset, const std::string& split) {
    Eigen::Index total = 0;
    auto selected = [&](const dataio::SequenceRecord& r) {
        return split == "all" || dataio::split_name(r.split) == split;
    };
    for (const auto& r : dataset.sequences) {
        if (selected(r)) total += r.frames.rows();
    }
    require(total > 0, ErrorCode::invalid_argument,
            "no frames in split '" + split + "'");
    Matrix out(total, dataset.feature_dim);
    Eigen::Index row = 0;
    for (const auto& r : dataset.sequences) {
        if (!selected(r)) continue;
        out.middleRows(row, r.frames.rows()) = r.frames;
        row += r.frames.rows();
    }
    return out;
}

Matrix stacked_labels(const dataio::SequenceDataset& dataset, const std::string& split) {
    Eigen::Index total = 0;
    auto selected = [&](const dataio::SequenceRecord& r) {
        return split == "all" || dataio::split_name(r.split) == split;
    };
    for (const auto& r : dataset.sequences) {
        if (selected(r)) total += r.labels.rows();
    }
    Matrix out(total, dataset.label_dim());
    Eigen::Index row = 0;
    for (const auto& r : dataset.sequences) {
        if (!selected(r)) continue;
        out.middleRows(row, r.labels.rows()) = r.labels;
        row += r.labels.rows();
    }
    return out;
}

Json pose_to_json(const face3dmm::PoseParams& pose) {
    Json j;
    j["scale"] = pose.scale;
    j["rotation"] = matrix_to_json(pose.rotation);
    j["translation"] = {pose.translation(0), pose.translation(1)};
    return j;
}

Vector parse_landmarks_csv(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse,
            path.string() + ": empty file");
    require(line == "x,y", ErrorCode::parse,
            path.string() + ":1: expected header 'x,y', got '" + line + "'");
    std::vector<double> values;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto comma = line.find(',');
        require(comma != std::string::npos && line.find(',', comma + 1) == std::string::npos,
                ErrorCode::parse, where + ": expected exactly two fields");
        char* end = nullptr;
        const std::string xs = line.substr(0, comma);
        const std::string ys = line.substr(comma + 1);
        const double x = std::strtod(xs.c_str(), &end);
        require(end == xs.c_str() + xs.size() && !xs.empty(), ErrorCode::parse,
                where + ": cannot parse '" + xs + "'");
        const double y = std::strtod(ys.c_str(), &end);
        require(end == ys.c_str() + ys.size() && !ys.empty(), ErrorCode::parse,
                where + ": cannot parse '" + ys + "'");
        require(std::isfinite(x) && std::isfinite(y), ErrorCode::parse,
                where + ": non-finite coordinate");
        values.push_back(x);
        values.push_back(y);
    }
    require(!values.empty(), ErrorCode::parse, path.string() + ": no landmarks");
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_landmarks_csv(const fs::path& path, const Vector& landmarks) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write " + path.string());
    out << "x,y\n";
    for (Eigen::Index v = 0; v + 1 < landmarks.size(); v += 2) {
        out << format_double(landmarks(v)) << "," << format_double(landmarks(v + 1)) << "\n";
    }
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

/// Regression panels shared by the va and emotions modes of analyze-corr.
void write_regression_outputs(const fs::path& dir,
                              const std::vector<std::string>& target_names,
                              const std::vector<analysis::LinRegResult>& fits,
                              const std::vector<std::string>& feature_names) {
    Json panel;
    panel["feature_names"] = feature_names;
    Json targets = Json::object();
    for (std::size_t i = 0; i < fits.size(); ++i) {
        Json t;
        Json coeffs = Json::object();
        for (std::size_t k = 0; k < feature_names.size(); ++k) {
            coeffs[feature_names[k]] = fits[i].coefficients(static_cast<Eigen::Index>(k));
        }
        t["coefficients"] = std::move(coeffs);
        t["intercept"] = fits[i].intercept;
        t["r_squared"] = fits[i].r_squared;
        t["residual_norm"] = fits[i].residual_norm;
        t["ill_conditioned"] = fits[i].ill_conditioned;
        targets[target_names[i]] = std::move(t);
    }
    panel["targets"] = std::move(targets);
    write_json_file(dir / "coefficients.json", panel);

    std::ofstream csv(dir / "coefficients.csv");
    require(csv.good(), ErrorCode::io, "cannot write coefficients.csv");
    csv << "feature";
    for (const auto& name : target_names) csv << "," << name;
    csv << "\n";
    for (std::size_t k = 0; k < feature_names.size(); ++k) {
        csv << feature_names[k];
        for (const auto& fit : fits)
            csv << "," << format_double(fit.coefficients(static_cast<Eigen::Index>(k)));
        csv << "\n";
    }
    csv << "intercept";
    for (const auto& fit : fits) csv << "," << format_double(fit.intercept);
    csv << "\n";
    require(csv.good(), ErrorCode::io, "write failed for coefficients.csv");
}

} // namespace

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open " + path.string() + " for digest");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[65536];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

void run_synth(const Json& config) {
    check_keys(config,
               {"task", "seed", "out", "force", "sequences", "frames", "vertices", "k_id",
                "k_ex", "label_scale", "noise_sigma", "action_units", "classes", "per_class",
                "cluster_sigma", "separation"},
               "synth");
    const std::string task = config.value("task", "va");
    const auto seed = config.value("seed", std::uint64_t{0});
    const fs::path out = require_string(config, "out", "synth");
    const bool force = config.value("force", false);
    const int sequences = config.value("sequences", 12);
    const int frames = config.value("frames", 200);
    const int vertices = config.value("vertices", 34);
    const int k_id = config.value("k_id", 10);
    const int k_ex = config.value("k_ex", 10);

    RunLog log;
    log.command = "synth";
    log.resolved = {{"task", task},       {"seed", seed},           {"out", out.string()},
                    {"force", force},     {"sequences", sequences}, {"frames", frames},
                    {"vertices", vertices}, {"k_id", k_id},         {"k_ex", k_ex}};

    OutputStage stage(out, force);
    const auto model = face3dmm::make_toy_model(derive_seed(seed, 0x3d0dULL), vertices,
                                                k_id, k_ex);

    if (task == "va" || task == "au") {
        if (frames < 2) {
            log.warn("frames < 2: sequences are below the minimum window length, "
                     "so the dataset has zero trainable windows");
        }
        Json truth;
        dataio::SequenceDataset dataset;
        if (task == "va") {
            dataio::SynthVaConfig cfg;
            cfg.seed = seed;
            cfg.n_sequences = sequences;
            cfg.frames = frames;
            cfg.label_scale = config.value("label_scale", 1.0);
            cfg.noise_sigma = config.value("noise_sigma", 0.01);
            Rng map_rng(derive_seed(seed, 0x30a9ULL));
            const Matrix mapping = Matrix::NullaryExpr(
                k_ex, 2, [&](Eigen::Index, Eigen::Index) { return map_rng.uniform(-0.6, 0.6); });
            auto result = dataio::synth_va_dataset(cfg, model, mapping);
            dataset = std::move(result.dataset);
            truth["task"] = "va";
            truth["mapping"] = matrix_to_json(result.mapping);
            truth["noise_sigma"] = cfg.noise_sigma;
            truth["label_scale"] = cfg.label_scale;
            log.resolved["label_scale"] = cfg.label_scale;
            log.resolved["noise_sigma"] = cfg.noise_sigma;
        } else {
            dataio::SynthAuConfig cfg;
            cfg.seed = seed;
            cfg.n_sequences = sequences;
            cfg.frames = frames;
            cfg.n_action_units = config.value("action_units", 5);
            auto result = dataio::synth_au_dataset(cfg, model);
            dataset = std::move(result.dataset);
            truth["task"] = "au";
            truth["mapping"] = matrix_to_json(result.mapping);
            truth["offsets"] = vector_to_json(result.offsets);
            log.resolved["action_units"] = cfg.n_action_units;
        }
        dataio::save_dataset(stage.dir(), dataset);
        model.save(stage.dir() / "model.json");
        write_json_file(stage.dir() / "truth.json", truth);
        log_info("synth: wrote " + std::to_string(dataset.sequences.size()) +
                 " sequences to " + out.string());
    } else if (task == "emo") {
        dataio::SynthEmoConfig cfg;
        cfg.seed = seed;
        cfg.n_classes = config.value("classes", 6);
        cfg.per_class = config.value("per_class", 40);
        cfg.cluster_sigma = config.value("cluster_sigma", 0.5);
        cfg.separation = config.value("separation", 5.0);
        const auto table = dataio::synth_emo_table(cfg, k_ex);
        dataio::save_table(stage.dir() / "table.csv", table);
        Json truth;
        truth["task"] = "emo";
        truth["n_classes"] = cfg.n_classes;
        truth["per_class"] = cfg.per_class;
        truth["cluster_sigma"] = cfg.cluster_sigma;
        truth["separation"] = cfg.separation;
        write_json_file(stage.dir() / "truth.json", truth);
        log.resolved["classes"] = cfg.n_classes;
        log.resolved["per_class"] = cfg.per_class;
        log.resolved["cluster_sigma"] = cfg.cluster_sigma;
        log.resolved["separation"] = cfg.separation;
    } else if (task == "landmarks") {
        Rng rng(derive_seed(seed, 0x1a4dULL));
        face3dmm::ShapeCoefficients coeffs;
        coeffs.identity = Vector::NullaryExpr(model.identity_dim(),
                                              [&](Eigen::Index) { return rng.normal(0.0, 0.5); });
        coeffs.expression = Vector::NullaryExpr(model.expression_dim(),
                                                [&](Eigen::Index) { return rng.normal(0.0, 0.7); });
        const double angle = rng.uniform(-0.5, 0.5);
        face3dmm::PoseParams pose;
        pose.rotation = Eigen::AngleAxisd(angle, Eigen::Vector3d(rng.normal(), rng.normal(),
                                                                 rng.normal())
                                                     .normalized())
                            .toRotationMatrix();
        pose.scale = rng.uniform(0.8, 1.5);
        pose.translation = Eigen::Vector2d(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        const Vector landmarks = face3dmm::project(pose, synthesize_shape(model, coeffs));

        model.save(stage.dir() / "model.json");
        write_landmarks_csv(stage.dir() / "landmarks.csv", landmarks);
        Json truth;
        truth["task"] = "landmarks";
        truth["pose"] = pose_to_json(pose);
        truth["alpha_id"] = vector_to_json(coeffs.identity);
        truth["alpha_ex"] = vector_to_json(coeffs.expression);
        write_json_file(stage.dir() / "truth.json", truth);
    } else {
        raise(ErrorCode::invalid_argument,
              "synth: unknown task '" + task + "' (expected va, au, emo, or landmarks)");
    }

    log.write(stage.dir());
    stage.commit();
}

void run_fit_pca(const Json& config) {
    check_keys(config, {"manifest", "components", "split", "out", "force"}, "fit-pca");
    const fs::path manifest = require_string(config, "manifest", "fit-pca");
    require(config.contains("components"), ErrorCode::parse,
            "fit-pca: missing required key 'components'");
    const int components = config.at("components").get<int>();
    const std::string split = config.value("split", "train");
    const fs::path out = require_string(config, "out", "fit-pca");
    const bool force = config.value("force", false);

    RunLog log;
    log.command = "fit-pca";
    log.resolved = {{"manifest", manifest.string()},
                    {"components", components},
                    {"split", split},
                    {"out", out.string()},
                    {"force", force}};
    log.add_input(manifest);

    const auto dataset = dataio::load_dataset(manifest);
    const Matrix data = stacked_frames(dataset, split);

    OutputStage stage(out, force);
    const auto model = features::fit_pca(data, components);
    model.save(stage.dir() / "pca.json");

    const Vector spectrum = features::explained_variance_spectrum(data);
    std::ofstream csv(stage.dir() / "variance_ratio.csv");
    require(csv.good(), ErrorCode::io, "cannot write variance_ratio.csv");
    csv << "components,ratio,cumulative\n";
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
        cumulative += spectrum(i);
        csv << (i + 1) << "," << format_double(spectrum(i)) << ","
            << format_double(cumulative) << "\n";
    }
    require(csv.good(), ErrorCode::io, "write failed for variance_ratio.csv");

    log.write(stage.dir());
    stage.commit();
    log_info("fit-pca: " + std::to_string(components) + " components explain " +
             format_double(model.explained_variance_ratio.sum()) + " of variance");
}

void run_train(const Json& config) {
    check_keys(config, {"manifest", "out", "force", "hidden", "seed", "resume", "train"},
               "train");
    const fs::path manifest = require_string(config, "manifest", "train");
    const fs::path out = require_string(config, "out", "train");
    const bool force = config.value("force", false);
    const int hidden = config.value("hidden", 128);
    const auto seed = config.value("seed", std::uint64_t{0});

    temporal::TrainConfig train_cfg =
        temporal::TrainConfig::from_json(config.value("train", Json::object()));
    train_cfg.seed = seed;

    RunLog log;
    log.command = "train";
    log.resolved = {{"manifest", manifest.string()}, {"out", out.string()},
                    {"force", force},                {"hidden", hidden},
                    {"seed", seed}};
    log.add_input(manifest);

    const auto dataset = dataio::load_dataset(manifest);

    temporal::BiGruRegressor model;
    int epoch_offset = 0;
    if (config.contains("resume")) {
        const fs::path resume = config.at("resume").get<std::string>();
        log.resolved["resume"] = resume.string();
        log.add_input(resume);
        auto ckpt = temporal::load_checkpoint(resume);
        model = std::move(ckpt.model);
        epoch_offset = ckpt.epochs_trained;
        require(model.input_dim == dataset.feature_dim &&
                    model.output_dim == dataset.label_dim(),
                ErrorCode::dimension_mismatch,
                "train: resumed checkpoint does not match the dataset");
    } else {
        model = temporal::make_regressor(dataset.feature_dim, hidden, dataset.label_dim(),
                                         derive_seed(seed, 0x1217ULL));
    }
    train_cfg.epoch_offset = epoch_offset;
    log.resolved["train"] = train_cfg.to_json();

    const auto result = temporal::train(dataset, std::move(model), train_cfg);

    OutputStage stage(out, force);
    temporal::save_checkpoint(stage.dir() / "checkpoint.json", result.model, train_cfg,
                              result.best_epoch, epoch_offset + train_cfg.epochs);

    std::ofstream csv(stage.dir() / "history.csv");
    require(csv.good(), ErrorCode::io, "cannot write history.csv");
    csv << "epoch,lr,train_loss,val_score";
    for (const auto& name : dataset.label_names) {
        for (const char* metric : {"ccc", "icc", "mse", "pcc", "rmse", "acc"}) {
            csv << ",val." << name << "." << metric;
        }
    }
    csv << "\n";
    for (const auto& record : result.history) {
        csv << record.epoch << "," << format_double(record.lr) << ","
            << format_double(record.train_loss) << "," << format_double(record.val_score);
        for (const auto& name : dataset.label_names) {
            const auto& d = record.validation.dimensions.at(name);
            for (const double v : {d.ccc, d.icc, d.mse, d.pcc, d.rmse, d.acc}) {
                csv << "," << format_double(v);
            }
        }
        csv << "\n";
    }
    require(csv.good(), ErrorCode::io, "write failed for history.csv");

    log.write(stage.dir());
    stage.commit();
    if (!result.history.empty()) {
        log_info("train: best validation score " + format_double(result.best_score) +
                 " at epoch " + std::to_string(result.best_epoch));
    }
}

void run_eval(const Json& config) {
    check_keys(config, {"manifest", "checkpoint", "split", "pooling", "seq_len", "out", "force"},
               "eval");
    const fs::path manifest = require_string(config, "manifest", "eval");
    const fs::path checkpoint = require_string(config, "checkpoint", "eval");
    const std::string split = config.value("split", "val");
    const std::string pooling_name = config.value("pooling", "pooled");
    const fs::path out = require_string(config, "out", "eval");
    const bool force = config.value("force", false);

    require(pooling_name == "pooled" || pooling_name == "per_sequence", ErrorCode::parse,
            "eval: pooling must be 'pooled' or 'per_sequence'");
    const auto pooling = pooling_name == "pooled" ? temporal::Pooling::pooled
                                                  : temporal::Pooling::per_sequence;

    const auto dataset = dataio::load_dataset(manifest);
    const auto ckpt = temporal::load_checkpoint(checkpoint);
    const int seq_len = config.value("seq_len", ckpt.config.seq_len);

    RunLog log;
    log.command = "eval";
    log.resolved = {{"manifest", manifest.string()}, {"checkpoint", checkpoint.string()},
                    {"split", split},                {"pooling", pooling_name},
                    {"seq_len", seq_len},            {"out", out.string()},
                    {"force", force}};
    log.add_input(manifest);
    log.add_input(checkpoint);

    const auto report = temporal::evaluate(ckpt.model, dataset,
                                           dataio::split_from_name(split), seq_len, pooling);

    OutputStage stage(out, force);
    write_json_file(stage.dir() / ("metrics_" + split + ".json"), report.to_json());
    log.write(stage.dir());
    stage.commit();
}

void run_analyze_corr(const Json& config) {
    check_keys(config, {"mode", "manifest", "table", "split", "standardize", "out", "force"},
               "analyze-corr");
    const std::string mode = config.value("mode", "va");
    const bool standardize = config.value("standardize", false);
    const fs::path out = require_string(config, "out", "analyze-corr");
    const bool force = config.value("force", false);

    RunLog log;
    log.command = "analyze-corr";
    log.resolved = {{"mode", mode},
                    {"standardize", standardize},
                    {"out", out.string()},
                    {"force", force}};

    Matrix features;
    std::vector<std::string> target_names;
    std::vector<analysis::LinRegResult> fits;

    auto maybe_standardize = [&](Matrix m) {
        if (!standardize) return m;
        const Vector mean = m.colwise().mean();
        Matrix centered = m.rowwise() - mean.transpose();
        const Vector sd = (centered.array().square().colwise().sum() /
                           static_cast<double>(m.rows()))
                              .sqrt()
                              .max(1e-8)
                              .matrix()
                              .transpose();
        return Matrix(centered.array().rowwise() / sd.transpose().array());
    };

    if (mode == "va") {
        const fs::path manifest = require_string(config, "manifest", "analyze-corr");
        const std::string split = config.value("split", "all");
        log.resolved["manifest"] = manifest.string();
        log.resolved["split"] = split;
        log.add_input(manifest);

        const auto dataset = dataio::load_dataset(manifest);
        features = maybe_standardize(stacked_frames(dataset, split));
        const Matrix labels = stacked_labels(dataset, split);
        target_names = dataset.label_names;
        for (Eigen::Index l = 0; l < labels.cols(); ++l) {
            fits.push_back(analysis::linreg_fit(features, labels.col(l)));
        }
    } else if (mode == "emotions") {
        const fs::path table_path = require_string(config, "table", "analyze-corr");
        log.resolved["table"] = table_path.string();
        log.add_input(table_path);

        const auto table = dataio::load_table(table_path);
        features = maybe_standardize(table.features);
        fits = analysis::onevsrest_linreg(
            features, {table.labels.data(), table.labels.size()}, table.n_classes);
        for (int c = 0; c < table.n_classes; ++c) {
            target_names.push_back("class_" + std::to_string(c));
        }
    } else {
        raise(ErrorCode::invalid_argument,
              "analyze-corr: mode must be 'va' or 'emotions'");
    }

    std::vector<std::string> feature_names;
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        feature_names.push_back("x" + std::to_string(i));
    }

    OutputStage stage(out, force);
    write_regression_outputs(stage.dir(), target_names, fits, feature_names);
    log.write(stage.dir());
    stage.commit();

    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].ill_conditioned) {
            log_line(LogLevel::error, "analyze-corr: fit for " + target_names[i] +
                                          " is ill-conditioned (ridge-stabilized)");
        }
    }
}

void run_knn_eval(const Json& config) {
    check_keys(config, {"table", "k", "quantile_normalize", "q_lo", "q_hi", "out", "force"},
               "knn-eval");
    const fs::path table_path = require_string(config, "table", "knn-eval");
    const int k = config.value("k", 5);
    const bool normalize = config.value("quantile_normalize", false);
    const double q_lo = config.value("q_lo", 0.25);
    const double q_hi = config.value("q_hi", 0.75);
    const fs::path out = require_string(config, "out", "knn-eval");
    const bool force = config.value("force", false);

    RunLog log;
    log.command = "knn-eval";
    log.resolved = {{"table", table_path.string()}, {"k", k},
                    {"quantile_normalize", normalize}, {"q_lo", q_lo},
                    {"q_hi", q_hi},                  {"out", out.string()},
                    {"force", force}};
    log.add_input(table_path);

    const auto table = dataio::load_table(table_path);
    Matrix features = table.features;
    if (normalize) {
        const auto scaler = features::fit_quantile_scaler(features, q_lo, q_hi);
        features = features::quantile_apply_all(scaler, features);
    }
    const auto result = analysis::knn_loocv(
        features, {table.labels.data(), table.labels.size()}, analysis::KnnConfig{k});

    OutputStage stage(out, force);
    Json j;
    j["accuracy"] = result.accuracy;
    j["k"] = k;
    j["n_classes"] = table.n_classes;
    j["quantile_normalize"] = normalize;
    Json confusion = Json::array();
    for (Eigen::Index r = 0; r < result.confusion.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < result.confusion.cols(); ++c)
            row.push_back(result.confusion(r, c));
        confusion.push_back(std::move(row));
    }
    j["confusion"] = std::move(confusion);
    write_json_file(stage.dir() / "knn.json", j);
    log.write(stage.dir());
    stage.commit();
    log_info("knn-eval: accuracy " + format_double(result.accuracy));
}

void run_fit_3dmm(const Json& config) {
    check_keys(config, {"model", "landmarks", "iters", "out", "force"}, "fit-3dmm");
    const fs::path model_path = require_string(config, "model", "fit-3dmm");
    const fs::path landmarks_path = require_string(config, "landmarks", "fit-3dmm");
    const int iters = config.value("iters", 50);
    const fs::path out = require_string(config, "out", "fit-3dmm");
    const bool force = config.value("force", false);

    RunLog log;
    log.command = "fit-3dmm";
    log.resolved = {{"model", model_path.string()},
                    {"landmarks", landmarks_path.string()},
                    {"iters", iters},
                    {"out", out.string()},
                    {"force", force}};
    log.add_input(model_path);
    log.add_input(landmarks_path);

    const auto model = face3dmm::MorphableModel::load(model_path);
    const Vector landmarks = parse_landmarks_csv(landmarks_path);
    require(landmarks.size() == 2 * model.vertex_count(), ErrorCode::dimension_mismatch,
            landmarks_path.string() + ": expected " + std::to_string(model.vertex_count()) +
                " landmarks, got " + std::to_string(landmarks.size() / 2));

    const auto fit = face3dmm::fit_pose_and_coefficients(model, landmarks, iters);

    OutputStage stage(out, force);
    Json j;
    j["pose"] = pose_to_json(fit.pose);
    j["alpha_id"] = vector_to_json(fit.coefficients.identity);
    j["alpha_ex"] = vector_to_json(fit.coefficients.expression);
    j["residual"] = fit.residual;
    Json history = Json::array();
    for (const double r : fit.residual_history) history.push_back(r);
    j["residual_history"] = std::move(history);
    write_json_file(stage.dir() / "fit.json", j);
    log.write(stage.dir());
    stage.commit();
    log_info("fit-3dmm: residual " + format_double(fit.residual));
}

void run_command(const std::string& command, const Json& config) {
    if (command == "synth") return run_synth(config);
    if (command == "fit-pca") return run_fit_pca(config);
    if (command == "train") return run_train(config);
    if (command == "eval") return run_eval(config);
    if (command == "analyze-corr") return run_analyze_corr(config);
    if (command == "knn-eval") return run_knn_eval(config);
    if (command == "fit-3dmm") return run_fit_3dmm(config);
    raise(ErrorCode::invalid_argument, "unknown command '" + command + "'");
}

} // namespace affect::pipeline
