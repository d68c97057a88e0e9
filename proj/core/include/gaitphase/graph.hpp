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
#include <string>
#include <string_view>
#include <vector>

#include "gaitphase/ops.hpp"
#include "gaitphase/tape.hpp"

namespace gaitphase {

struct CoarseGroup {
  std::string name;
  std::vector<std::size_t> members;
};

/// Fine joints followed by coarse body-part nodes. Node i < fine_count()
/// is joint i; node fine_count() + g is coarse group g.
struct MultiScaleGraph {
  std::string convention;
  std::vector<std::string> fine_joints;
  std::vector<CoarseGroup> coarse_groups;

  std::size_t fine_count() const { return fine_joints.size(); }
  std::size_t coarse_count() const { return coarse_groups.size(); }
  std::size_t node_count() const { return fine_joints.size() + coarse_groups.size(); }
  std::vector<std::string> node_names() const;
  std::size_t joint_index(std::string_view name) const;
};

inline constexpr std::string_view kH36M17 = "h36m17";

/// The 17-joint lifting layout with six body-part groups. Other conventions
/// are rejected with UsageError.
MultiScaleGraph build_multiscale_graph(std::string_view convention = kH36M17);

/// Per-frame, per-axis mean of each group's member joints:
/// (frames, R1, 3) -> (frames, R2, 3).
NDArray coarsen(const MultiScaleGraph& graph, const NDArray& joints);

/// Uniform entries in [-1/sqrt(n), 1/sqrt(n)], deterministic in the seed.
NDArray init_adjacency(std::size_t nodes, std::uint64_t seed);

enum class Activation { kTanh, kIdentity };

/// One dense graph-convolution layer over all nodes:
///   h' = act(A h W^T)  (+ h when `residual` and widths match)
/// h (B,n,in), adjacency (n,n), weight (out,in).
Var mgd_gcl_forward(Var h, Var adjacency, Var weight, Activation act, bool residual);

/// Writes `<stem>.csv` (header `node,<names>`, one labelled row per node,
/// 9 significant digits) and `<stem>.pgm` (P5 heatmap, min-max scaled;
/// a constant matrix maps to mid-gray).
void export_adjacency(const NDArray& adjacency, const std::vector<std::string>& names,
                      const std::filesystem::path& stem);

struct LabelledMatrix {
  std::vector<std::string> names;
  NDArray values;
};

LabelledMatrix load_adjacency_csv(const std::filesystem::path& path);

/// 8-bit min-max scaled heatmap bytes in row-major order.
std::vector<std::uint8_t> heatmap_bytes(const NDArray& matrix);

}  // namespace gaitphase
