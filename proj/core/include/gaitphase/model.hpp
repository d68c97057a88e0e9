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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitphase/data.hpp"
#include "gaitphase/graph.hpp"
#include "gaitphase/periodic.hpp"
#include "gaitphase/tape.hpp"

namespace gaitphase {

enum class SpatialInput { kVelocity, kPosition };
enum class ReconTarget { kVelocity, kPosition };
enum class FusionSource { kPhaseParams, kLatent };

struct ModelConfig {
  std::size_t layers = 12;
  std::size_t hidden = 512;
  std::size_t channels = 8;
  std::size_t window = 60;
  std::size_t classes = 2;
  std::size_t joints = 17;
  std::size_t fusion_dim = 128;
  std::size_t compactor_hidden = 32;
  std::size_t kernel = 7;
  bool use_temporal = true;
  bool residual = true;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  /// Root-centred positions: frame differencing amplifies per-frame sensor
  /// noise far above the gait signal, velocities remain selectable.
  SpatialInput spatial_input = SpatialInput::kPosition;
  ReconTarget recon_target = ReconTarget::kVelocity;
  FusionSource fusion_source = FusionSource::kPhaseParams;

  /// Throws UsageError on out-of-range fields.
  void validate() const;
  std::size_t dims() const { return joints * 3; }
  std::size_t fused_width() const { return hidden + fusion_dim; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Model inputs for B windows.
struct Batch {
  NDArray velocity;      // (B, d, T)
  NDArray node_input;    // (B, n, 3T)
  NDArray recon_target;  // (B, d, T)
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Stacks windows of T+1 normalized frames into model inputs. Labels may
/// be empty for unlabelled inference.
Batch make_batch(const ModelConfig& config, const MultiScaleGraph& graph, std::span<const GaitWindow* const> windows,
                 std::span<const int> labels);

struct ForwardResult {
  PeriodicOutput periodic;
  Var node_features;  // (B, n, hidden)
  Var fused;          // (B, n, hidden + fusion_dim)
  Var logits;         // (B, z)
  Var probabilities;  // (B, z)
  Var ce;
  Var mse;
  Var total;
};

/// Parameters plus the architecture that reads them.
class GaitModel {
 public:
  explicit GaitModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const MultiScaleGraph& graph() const { return graph_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Records the full forward pass, including both losses when requested
  /// and the batch carries labels.
  ForwardResult forward(ParamBinder& bind, const Batch& batch, bool with_loss = true) const;

  /// Softmax outputs (B, z) without gradient tracking.
  NDArray predict_proba(const Batch& batch) const;
  std::vector<PhaseParams> phase_params(const Batch& batch) const;

  /// Spatial GCN layer l (1-based) adjacency.
  const NDArray& adjacency(std::size_t layer) const;

 private:
  ModelConfig config_;
  MultiScaleGraph graph_;
  ParamStore params_;
};

/// Stem then `config.layers` dense graph layers: (B,n,3T) -> (B,n,hidden).
Var spatial_branch(ParamBinder& bind, const ModelConfig& config, Var node_input);

/// Appends the projected temporal descriptor to every node row. With the
/// temporal branch disabled the appended block is zeros.
Var fuse(ParamBinder& bind, const ModelConfig& config, Var node_features, const PeriodicOutput* periodic);

/// Head graph layer, mean over nodes, linear to z logits.
Var classify_logits(ParamBinder& bind, const ModelConfig& config, Var fused);

/// Sum of squared errors divided by the number of frames, where a frame is
/// one slice along every axis except `feature_axis`.
Var loss_mse(Var reconstructed, Var target, std::size_t feature_axis);
/// Mean over rows of -sum_i y_i log softmax(logits)_i. one_hot is (B, z)
/// and must hold exactly one 1 per row.
Var loss_ce(Var logits, const NDArray& one_hot);
NDArray one_hot(std::span<const int> labels, std::size_t classes);
Var total_loss(Var ce, Var mse, double lambda);

// ---- checkpoints ------------------------------------------------------------
//
// Little-endian: "GPHZ", u32 version, u32 length + config JSON, u32 record
// count, then per record: u32 length + name, u32 rank, u64 dims, f64 data.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const GaitModel& model);
GaitModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const GaitModel& model, const std::filesystem::path& path);
GaitModel load_checkpoint(const std::filesystem::path& path);

/// Optional CLI-side architecture values; any that disagree with a stored
/// config raise CheckpointError(kConfigConflict).
struct ConfigOverrides {
  std::optional<std::size_t> layers;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> channels;
  std::optional<std::size_t> window;
  std::optional<bool> use_temporal;
  std::optional<bool> residual;
};

void check_overrides(const ModelConfig& stored, const ConfigOverrides& overrides);

}  // namespace gaitphase
