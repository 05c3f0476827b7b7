/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/dataio.hpp
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
#include "affect/face3dmm.hpp"
#include "affect/json_io.hpp"

namespace affect::dataio {

enum class Split { train, val, test };

const char* split_name(Split split);
Split split_from_name(const std::string& name);

/// One video's worth of per-frame features and labels.
struct SequenceRecord {
    std::string id;
    Matrix frames; // T x D
    Matrix labels; // T x L
    Split split = Split::train;
};

struct SequenceDataset {
    int feature_dim = 0;
    std::vector<std::string> label_names;
    std::vector<SequenceRecord> sequences;

    int label_dim() const { return static_cast<int>(label_names.size()); }
};

/**
 * Loads a manifest JSON ({feature_dim, label_names, sequences:[{id, file,
 * split}]}) and every referenced sequence CSV (header t,x0..x{D-1},<label
 * names>, t strictly increasing integers). Validation failures carry file
 * and line diagnostics.
 */
SequenceDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus one CSV per sequence into the directory.
/// Decimals carry 17 significant digits so load(save(x)) is bit-exact.
void save_dataset(const std::filesystem::path& directory, const SequenceDataset& dataset);

struct Window {
    int sequence_index = 0;
    int start = 0;
    int length = 0;
};

/**
 * Non-overlapping fixed-length windows per sequence of the chosen split, in
 * deterministic order; a trailing remainder is kept iff it has >= 2 frames
 * (agreement metrics need variance).
 */
std::vector<Window> make_windows(const SequenceDataset& dataset, Split split,
                                 int window_len = 100, int stride = 100);

/// Windows over every split at once (same remainder rule).
std::vector<Window> make_windows_all(const SequenceDataset& dataset,
                                     int window_len = 100, int stride = 100);

struct SynthVaConfig {
    std::uint64_t seed = 0;
    int n_sequences = 12;
    int frames = 200;
    double noise_sigma = 0.01;
    double label_scale = 1.0; // scales the generator mapping before tanh
};

struct SynthVaResult {
    SequenceDataset dataset;
    Matrix mapping; // K_ex x 2 ground-truth map from alpha_ex to (v, a)
};

/**
 * Synthetic valence-arousal sequences: smooth seeded sinusoidal alpha_ex
 * trajectories through the morphable model's expression space, labelled
 * y_t = tanh(mapping^T alpha_t) + N(0, noise_sigma^2), clipped to [-1, 1].
 * mapping must be K_ex x 2.
 */
SynthVaResult synth_va_dataset(const SynthVaConfig& cfg,
                               const face3dmm::MorphableModel& model,
                               const Matrix& mapping);

struct SynthAuConfig {
    std::uint64_t seed = 0;
    int n_sequences = 12;
    int frames = 200;
    int n_action_units = 5;
};

struct SynthAuResult {
    SequenceDataset dataset;
    Matrix mapping; // K_ex x L
    Vector offsets; // L, pre-rectification intensity offsets
};

/**
 * Synthetic AU intensities: labels are exact rectified-linear functions of
 * alpha_ex, y = clip(relu(mapping^T alpha + offset), 0, 5).
 */
SynthAuResult synth_au_dataset(const SynthAuConfig& cfg,
                               const face3dmm::MorphableModel& model);

/// Smooth per-coefficient trajectory: sum of 2-4 seeded sinusoids with
/// amplitudes in [0.2, 1]. Returns T x K_ex.
Matrix synth_trajectories(std::uint64_t seed, int frames, int k_ex);

/// Flat feature table with integer class labels (header x0..x{D-1},label).
struct LabeledTable {
    Matrix features;         // N x D
    std::vector<int> labels; // N, in [0, n_classes)
    int n_classes = 0;
};

LabeledTable load_table(const std::filesystem::path& path);
void save_table(const std::filesystem::path& path, const LabeledTable& table);

struct SynthEmoConfig {
    std::uint64_t seed = 0;
    int n_classes = 6;
    int per_class = 40;
    double cluster_sigma = 0.5;
    double separation = 5.0; // distance scale between class centroids
};

/// Gaussian class clusters in expression-coefficient space.
LabeledTable synth_emo_table(const SynthEmoConfig& cfg, int feature_dim);

} // namespace affect::dataio
