/*
 * Copyright 2026 The gaitphase Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitphase/data.hpp"
#include "gaitphase/metrics.hpp"
#include "gaitphase/model.hpp"

/// The work behind each CLI subcommand. Every command is deterministic in
/// its options.
namespace gaitphase::cli {

inline constexpr const char* kManifestName = "manifest.json";

// ---- corpus -----------------------------------------------------------------

/// Normalized sequences of a data directory holding manifest.json.
struct Corpus {
  std::filesystem::path root;
  DatasetManifest manifest;
  std::vector<SkeletonSequence> sequences;
  std::vector<int> labels;
};

Corpus load_corpus(const std::filesystem::path& data_dir, const MultiScaleGraph& graph);

/// Mean window probabilities per sequence: (sequences, z).
NDArray score_sequences(const GaitModel& model, const std::vector<const SkeletonSequence*>& sequences,
                        std::size_t stride);

// ---- synth ------------------------------------------------------------------

struct SynthOptions {
  SynthSpec spec;
  std::uint64_t seed = 0;
  double split_ratio = 0.75;
  std::filesystem::path out;
};

/// Writes one CSV per sequence plus manifest.json (with stratified split
/// tags) and returns the sequence count.
std::size_t cmd_synth(const SynthOptions& options, std::ostream& report);

// ---- train ------------------------------------------------------------------

struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path out;
  ModelConfig model;
  int epochs = 100;
  std::size_t batch = 16;
  double lr = 5e-4;
  std::uint64_t seed = 0;
  /// When set, re-split stratified by subject instead of using manifest tags.
  std::optional<double> split_ratio;
  bool split_by_environment = false;
  std::size_t stride = 10;
};

nlohmann::ordered_json to_json(const RunConfig& config);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_ce = 0.0;
  double train_mse = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  double val_auc = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  EvalResult best_val;
  EvalResult final_val;
};

/// Mini-batch Adam with cosine annealing. Writes config.json,
/// train_log.csv, best.ckpt, final.ckpt and results.json into `out`.
/// A non-finite loss raises NumericalError naming the epoch.
TrainResult cmd_train(const RunConfig& config, std::ostream& progress);

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  /// train, val, or all (manifest tags; all when untagged).
  std::string split = "val";
  std::size_t stride = 10;
  ConfigOverrides overrides;
};

EvalResult cmd_eval(const EvalOptions& options);
nlohmann::ordered_json to_json(const EvalResult& result);

// ---- inspect ----------------------------------------------------------------

struct InspectOptions {
  std::filesystem::path checkpoint;
  std::vector<std::size_t> layers;
  std::filesystem::path out;
  std::optional<std::filesystem::path> sequence;
  std::size_t stride = 10;
};

/// Exports adjacency CSV+PGM pairs for the requested 1-based layers and,
/// with a sequence, its per-window phase CSV. Returns written paths.
std::vector<std::filesystem::path> cmd_inspect(const InspectOptions& options);

/// Rows "window,A_0..,F_0..,O_0..,P_0.." for every window.
std::string format_phase_csv(const std::vector<PhaseParams>& params);

}  // namespace gaitphase::cli
