/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: src/dataio.cpp
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
#include "affect/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "affect/rng.hpp"

namespace affect::dataio {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& field, const std::string& where) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    require(ec == std::errc() && ptr == end, ErrorCode::parse,
            where + ": cannot parse number '" + field + "'");
    return value;
}

long parse_long(const std::string& field, const std::string& where) {
    long value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    require(ec == std::errc() && ptr == end, ErrorCode::parse,
            where + ": cannot parse integer '" + field + "'");
    return value;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string expected_header(int feature_dim, const std::vector<std::string>& label_names) {
    std::string header = "t";
    for (int i = 0; i < feature_dim; ++i) header += ",x" + std::to_string(i);
    for (const auto& name : label_names) header += "," + name;
    return header;
}

SequenceRecord load_sequence_csv(const std::filesystem::path& path, int feature_dim,
                                 const std::vector<std::string>& label_names) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "missing sequence file " + path.string());

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse,
            path.string() + ": empty file");
    const std::string expected = expected_header(feature_dim, label_names);
    require(line == expected, ErrorCode::parse,
            path.string() + ":1: header mismatch (expected '" + expected + "', got '" +
                line + "')");

    const int label_dim = static_cast<int>(label_names.size());
    std::vector<std::vector<double>> rows;
    long previous_t = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto fields = split_fields(line);
        require(static_cast<int>(fields.size()) == 1 + feature_dim + label_dim,
                ErrorCode::parse,
                where + ": expected " + std::to_string(1 + feature_dim + label_dim) +
                    " fields, got " + std::to_string(fields.size()));
        const long t = parse_long(fields[0], where);
        if (!rows.empty()) {
            require(t > previous_t, ErrorCode::parse,
                    where + ": frame index t must be strictly increasing");
        }
        previous_t = t;
        std::vector<double> row(static_cast<std::size_t>(feature_dim + label_dim));
        for (std::size_t i = 0; i < row.size(); ++i) {
            row[i] = parse_double(fields[i + 1], where);
            require(std::isfinite(row[i]), ErrorCode::parse, where + ": non-finite value");
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorCode::parse, path.string() + ": no frames");

    SequenceRecord record;
    const auto t_len = static_cast<Eigen::Index>(rows.size());
    record.frames.resize(t_len, feature_dim);
    record.labels.resize(t_len, label_dim);
    for (Eigen::Index i = 0; i < t_len; ++i) {
        for (int j = 0; j < feature_dim; ++j)
            record.frames(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int j = 0; j < label_dim; ++j)
            record.labels(i, j) =
                rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(feature_dim + j)];
    }
    return record;
}

void write_sequence_csv(const std::filesystem::path& path, const SequenceRecord& record,
                        const std::vector<std::string>& label_names) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write " + path.string());
    out << expected_header(static_cast<int>(record.frames.cols()), label_names) << "\n";
    for (Eigen::Index t = 0; t < record.frames.rows(); ++t) {
        out << t;
        for (Eigen::Index j = 0; j < record.frames.cols(); ++j)
            out << "," << format_double(record.frames(t, j));
        for (Eigen::Index j = 0; j < record.labels.cols(); ++j)
            out << "," << format_double(record.labels(t, j));
        out << "\n";
    }
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

/// Deterministic split assignment: indices 3, 8, 13, ... validate and
/// 4, 9, 14, ... test, the rest train (60/20/20 once n >= 5).
Split split_for_index(int i) {
    switch (i % 5) {
        case 3: return Split::val;
        case 4: return Split::test;
        default: return Split::train;
    }
}

/// Runs the 3DMM round trip for one trajectory: synthesize each frame's
/// shape, project under a fixed per-sequence pose, and recover the
/// expression coefficients from the landmarks. The recovered coefficients
/// are what a real pipeline would feed the regressor.
Matrix coefficients_through_model(const face3dmm::MorphableModel& model,
                                  const Matrix& trajectories, Rng& rng) {
    face3dmm::PoseParams pose;
    {
        const double ax = rng.uniform(-0.3, 0.3);
        const double ay = rng.uniform(-0.3, 0.3);
        const double az = rng.uniform(-0.3, 0.3);
        Eigen::Matrix3d rx, ry, rz;
        rx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax);
        ry << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay);
        rz << std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1;
        pose.rotation = rz * ry * rx;
        pose.scale = rng.uniform(0.8, 1.25);
        pose.translation = Eigen::Vector2d(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    }
    face3dmm::ShapeCoefficients coeffs;
    coeffs.identity = Vector::NullaryExpr(model.identity_dim(),
                                          [&](Eigen::Index) { return rng.normal(0.0, 0.5); });

    const auto t_len = trajectories.rows();
    Matrix recovered(t_len, model.expression_dim());
    for (Eigen::Index t = 0; t < t_len; ++t) {
        coeffs.expression = trajectories.row(t).transpose();
        const Vector landmarks = face3dmm::project(pose, synthesize_shape(model, coeffs));
        recovered.row(t) =
            face3dmm::fit_coefficients(model, landmarks, pose).coefficients.expression.transpose();
    }
    return recovered;
}

} // namespace

const char* split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    raise(ErrorCode::parse, "unknown split '" + name + "'");
}

SequenceDataset load_dataset(const std::filesystem::path& manifest_path) {
    const Json manifest = read_json_file(manifest_path);
    SequenceDataset dataset;
    dataset.feature_dim = manifest.at("feature_dim").get<int>();
    require(dataset.feature_dim >= 1, ErrorCode::parse,
            manifest_path.string() + ": feature_dim must be positive");
    for (const auto& name : manifest.at("label_names")) {
        dataset.label_names.push_back(name.get<std::string>());
    }
    require(!dataset.label_names.empty(), ErrorCode::parse,
            manifest_path.string() + ": label_names is empty");

    const auto base_dir = manifest_path.parent_path();
    for (const auto& entry : manifest.at("sequences")) {
        SequenceRecord record = load_sequence_csv(
            base_dir / entry.at("file").get<std::string>(), dataset.feature_dim,
            dataset.label_names);
        record.id = entry.at("id").get<std::string>();
        record.split = split_from_name(entry.at("split").get<std::string>());
        dataset.sequences.push_back(std::move(record));
    }
    return dataset;
}

void save_dataset(const std::filesystem::path& directory, const SequenceDataset& dataset) {
    std::filesystem::create_directories(directory);
    Json manifest;
    manifest["feature_dim"] = dataset.feature_dim;
    manifest["label_names"] = dataset.label_names;
    Json sequences = Json::array();
    for (const auto& record : dataset.sequences) {
        require(!record.id.empty() && record.id.find('/') == std::string::npos,
                ErrorCode::invalid_argument,
                "save_dataset: sequence id '" + record.id + "' is not a valid file stem");
        const std::string file = record.id + ".csv";
        write_sequence_csv(directory / file, record, dataset.label_names);
        sequences.push_back({{"id", record.id}, {"file", file}, {"split", split_name(record.split)}});
    }
    manifest["sequences"] = std::move(sequences);
    write_json_file(directory / "manifest.json", manifest);
}

std::vector<Window> make_windows(const SequenceDataset& dataset, Split split,
                                 int window_len, int stride) {
    require(window_len >= 2, ErrorCode::invalid_argument,
            "make_windows: window_len must be >= 2");
    require(stride >= 1, ErrorCode::invalid_argument, "make_windows: stride must be >= 1");
    std::vector<Window> windows;
    for (int s = 0; s < static_cast<int>(dataset.sequences.size()); ++s) {
        const auto& record = dataset.sequences[static_cast<std::size_t>(s)];
        if (record.split != split) continue;
        const int t_len = static_cast<int>(record.frames.rows());
        for (int start = 0; start < t_len; start += stride) {
            const int length = std::min(window_len, t_len - start);
            if (length >= 2) windows.push_back({s, start, length});
        }
    }
    return windows;
}

std::vector<Window> make_windows_all(const SequenceDataset& dataset, int window_len,
                                     int stride) {
    std::vector<Window> windows;
    for (Split split : {Split::train, Split::val, Split::test}) {
        auto part = make_windows(dataset, split, window_len, stride);
        windows.insert(windows.end(), part.begin(), part.end());
    }
    return windows;
}

Matrix synth_trajectories(std::uint64_t seed, int frames, int k_ex) {
    require(frames >= 1 && k_ex >= 1, ErrorCode::invalid_argument,
            "synth_trajectories: frames and k_ex must be positive");
    Rng rng(derive_seed(seed, 0x717aULL));
    Matrix out(frames, k_ex);
    for (int k = 0; k < k_ex; ++k) {
        const int n_waves = rng.uniform_int(2, 4);
        std::vector<double> amp(static_cast<std::size_t>(n_waves));
        std::vector<double> omega(static_cast<std::size_t>(n_waves));
        std::vector<double> phase(static_cast<std::size_t>(n_waves));
        for (int w = 0; w < n_waves; ++w) {
            amp[static_cast<std::size_t>(w)] = rng.uniform(0.2, 1.0);
            const double period = rng.uniform(25.0, 120.0); // frames; keeps motion smooth
            omega[static_cast<std::size_t>(w)] = 2.0 * std::numbers::pi / period;
            phase[static_cast<std::size_t>(w)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (int t = 0; t < frames; ++t) {
            double v = 0.0;
            for (int w = 0; w < n_waves; ++w) {
                const auto wi = static_cast<std::size_t>(w);
                v += amp[wi] * std::sin(omega[wi] * t + phase[wi]);
            }
            out(t, k) = v;
        }
    }
    return out;
}

SynthVaResult synth_va_dataset(const SynthVaConfig& cfg,
                               const face3dmm::MorphableModel& model,
                               const Matrix& mapping) {
    model.validate();
    require(mapping.rows() == model.expression_dim() && mapping.cols() == 2,
            ErrorCode::dimension_mismatch, "synth_va_dataset: mapping must be K_ex x 2");
    require(cfg.n_sequences >= 1 && cfg.frames >= 1, ErrorCode::invalid_argument,
            "synth_va_dataset: n_sequences and frames must be positive");

    const Matrix scaled_mapping = cfg.label_scale * mapping;
    SynthVaResult result;
    result.mapping = scaled_mapping;
    result.dataset.feature_dim = model.expression_dim();
    result.dataset.label_names = {"valence", "arousal"};

    for (int i = 0; i < cfg.n_sequences; ++i) {
        const Matrix traj =
            synth_trajectories(derive_seed(cfg.seed, 0xA11ULL, static_cast<std::uint64_t>(i)),
                               cfg.frames, model.expression_dim());
        Rng rng(derive_seed(cfg.seed, 0xB22ULL, static_cast<std::uint64_t>(i)));

        SequenceRecord record;
        char id[16];
        std::snprintf(id, sizeof(id), "seq%03d", i);
        record.id = id;
        record.split = split_for_index(i);
        record.frames = coefficients_through_model(model, traj, rng);
        record.labels = (traj * scaled_mapping).array().tanh();
        for (Eigen::Index t = 0; t < record.labels.rows(); ++t) {
            for (Eigen::Index j = 0; j < 2; ++j) {
                const double noisy = record.labels(t, j) + rng.normal(0.0, cfg.noise_sigma);
                record.labels(t, j) = std::clamp(noisy, -1.0, 1.0);
            }
        }
        result.dataset.sequences.push_back(std::move(record));
    }
    return result;
}

SynthAuResult synth_au_dataset(const SynthAuConfig& cfg,
                               const face3dmm::MorphableModel& model) {
    model.validate();
    require(cfg.n_sequences >= 1 && cfg.frames >= 1 && cfg.n_action_units >= 1,
            ErrorCode::invalid_argument, "synth_au_dataset: sizes must be positive");

    Rng map_rng(derive_seed(cfg.seed, 0xC33ULL));
    SynthAuResult result;
    result.mapping = Matrix::NullaryExpr(
        model.expression_dim(), cfg.n_action_units,
        [&](Eigen::Index, Eigen::Index) { return map_rng.uniform(-0.8, 0.8); });
    result.offsets = Vector::NullaryExpr(
        cfg.n_action_units, [&](Eigen::Index) { return map_rng.uniform(0.2, 1.0); });

    result.dataset.feature_dim = model.expression_dim();
    for (int l = 0; l < cfg.n_action_units; ++l) {
        result.dataset.label_names.push_back("au" + std::to_string(l + 1));
    }

    for (int i = 0; i < cfg.n_sequences; ++i) {
        const Matrix traj =
            synth_trajectories(derive_seed(cfg.seed, 0xA22ULL, static_cast<std::uint64_t>(i)),
                               cfg.frames, model.expression_dim());
        Rng rng(derive_seed(cfg.seed, 0xB44ULL, static_cast<std::uint64_t>(i)));

        SequenceRecord record;
        char id[16];
        std::snprintf(id, sizeof(id), "seq%03d", i);
        record.id = id;
        record.split = split_for_index(i);
        record.frames = coefficients_through_model(model, traj, rng);
        Matrix raw = traj * result.mapping;
        raw.rowwise() += result.offsets.transpose();
        record.labels = raw.array().max(0.0).min(5.0);
        result.dataset.sequences.push_back(std::move(record));
    }
    return result;
}

LabeledTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse,
            path.string() + ": empty file");
    const auto header = split_fields(line);
    require(header.size() >= 2 && header.back() == "label", ErrorCode::parse,
            path.string() + ":1: expected header x0..x{D-1},label");
    const int d = static_cast<int>(header.size()) - 1;
    for (int i = 0; i < d; ++i) {
        require(header[static_cast<std::size_t>(i)] == "x" + std::to_string(i),
                ErrorCode::parse, path.string() + ":1: bad feature column name");
    }

    std::vector<std::vector<double>> feature_rows;
    std::vector<int> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto fields = split_fields(line);
        require(static_cast<int>(fields.size()) == d + 1, ErrorCode::parse,
                where + ": wrong field count");
        std::vector<double> row(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            row[static_cast<std::size_t>(i)] = parse_double(fields[static_cast<std::size_t>(i)], where);
        }
        const long label = parse_long(fields.back(), where);
        require(label >= 0, ErrorCode::parse, where + ": label must be non-negative");
        feature_rows.push_back(std::move(row));
        labels.push_back(static_cast<int>(label));
    }
    require(!feature_rows.empty(), ErrorCode::parse, path.string() + ": no samples");

    LabeledTable table;
    table.features.resize(static_cast<Eigen::Index>(feature_rows.size()), d);
    for (Eigen::Index i = 0; i < table.features.rows(); ++i)
        for (int j = 0; j < d; ++j)
            table.features(i, j) = feature_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    table.labels = std::move(labels);
    table.n_classes = *std::max_element(table.labels.begin(), table.labels.end()) + 1;
    return table;
}

void save_table(const std::filesystem::path& path, const LabeledTable& table) {
    require(table.features.rows() == static_cast<Eigen::Index>(table.labels.size()),
            ErrorCode::dimension_mismatch, "save_table: feature/label count mismatch");
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write " + path.string());
    for (Eigen::Index j = 0; j < table.features.cols(); ++j) {
        out << "x" << j << ",";
    }
    out << "label\n";
    for (Eigen::Index i = 0; i < table.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.features.cols(); ++j)
            out << format_double(table.features(i, j)) << ",";
        out << table.labels[static_cast<std::size_t>(i)] << "\n";
    }
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

LabeledTable synth_emo_table(const SynthEmoConfig& cfg, int feature_dim) {
    require(cfg.n_classes >= 1 && cfg.per_class >= 1 && feature_dim >= 1,
            ErrorCode::invalid_argument, "synth_emo_table: sizes must be positive");
    Rng rng(derive_seed(cfg.seed, 0xE505ULL));

    // Axis-aligned centroids so separation is guaranteed, not probabilistic.
    Matrix centroids = Matrix::Zero(cfg.n_classes, feature_dim);
    for (int c = 0; c < cfg.n_classes; ++c) {
        const int axis = c % feature_dim;
        const double level = 1.0 + static_cast<double>(c / feature_dim);
        centroids(c, axis) = cfg.separation * level;
    }

    LabeledTable table;
    table.n_classes = cfg.n_classes;
    table.features.resize(static_cast<Eigen::Index>(cfg.n_classes) * cfg.per_class, feature_dim);
    table.labels.reserve(static_cast<std::size_t>(cfg.n_classes) * static_cast<std::size_t>(cfg.per_class));
    Eigen::Index row = 0;
    for (int c = 0; c < cfg.n_classes; ++c) {
        for (int s = 0; s < cfg.per_class; ++s) {
            for (int j = 0; j < feature_dim; ++j) {
                table.features(row, j) = centroids(c, j) + rng.normal(0.0, cfg.cluster_sigma);
            }
            table.labels.push_back(c);
            ++row;
        }
    }
    return table;
}

} // namespace affect::dataio
