/*
 * affectlab - continuous affect analysis from 3D face shape coefficients.
 *
 * File: include/affect/pipeline.hpp
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

#include <string>

#include "affect/json_io.hpp"

namespace affect::pipeline {

/**
 * File-level entry points behind the CLI subcommands. Each takes a JSON
 * config (unknown keys rejected, defaults filled), writes every output into
 * a staging directory, and renames it to `out` only on success, so failures
 * leave no partial outputs. Every run writes a run.json echoing the
 * resolved config and the digests of its inputs.
 */
void run_synth(const Json& config);
void run_fit_pca(const Json& config);
void run_train(const Json& config);
void run_eval(const Json& config);
void run_analyze_corr(const Json& config);
void run_knn_eval(const Json& config);
void run_fit_3dmm(const Json& config);

/// Dispatch by command name; unknown names are an error.
void run_command(const std::string& command, const Json& config);

/// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::filesystem::path& path);

} // namespace affect::pipeline
