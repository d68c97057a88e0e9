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

#include "gaitphase/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gaitphase/error.hpp"
#include "gaitphase/random.hpp"

namespace gaitphase {

std::vector<std::string> MultiScaleGraph::node_names() const {
  std::vector<std::string> names = fine_joints;
  for (const auto& g : coarse_groups) names.push_back(g.name);
  return names;
}

std::size_t MultiScaleGraph::joint_index(std::string_view name) const {
  auto it = std::find(fine_joints.begin(), fine_joints.end(), name);
  if (it == fine_joints.end()) throw UsageError("unknown joint '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - fine_joints.begin());
}

MultiScaleGraph build_multiscale_graph(std::string_view convention) {
  if (convention != kH36M17) {
    throw UsageError("unknown skeleton convention '" + std::string(convention) + "' (supported: h36m17)");
  }
  MultiScaleGraph g;
  g.convention = std::string(convention);
  g.fine_joints = {"pelvis",     "r_hip",   "r_knee",  "r_ankle",    "l_hip",   "l_knee",
                   "l_ankle",    "spine",   "thorax",  "neck",       "head",    "l_shoulder",
                   "l_elbow",    "l_wrist", "r_shoulder", "r_elbow", "r_wrist"};
  g.coarse_groups = {
      {"head_part", {9, 10}},
      {"torso_part", {0, 7, 8}},
      {"l_arm_part", {11, 12, 13}},
      {"r_arm_part", {14, 15, 16}},
      {"l_leg_part", {4, 5, 6}},
      {"r_leg_part", {1, 2, 3}},
  };
  return g;
}

NDArray coarsen(const MultiScaleGraph& graph, const NDArray& joints) {
  if (joints.rank() != 3 || joints.dim(1) != graph.fine_count() || joints.dim(2) != 3) {
    throw ShapeError("coarsen: expected (frames, " + std::to_string(graph.fine_count()) + ", 3), got " +
                     shape_str(joints.shape()));
  }
  const std::size_t frames = joints.dim(0);
  const std::size_t fine = graph.fine_count();
  const std::size_t groups = graph.coarse_count();
  NDArray out({frames, groups, 3});
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& members = graph.coarse_groups[g].members;
      const double inv = 1.0 / static_cast<double>(members.size());
      for (std::size_t axis = 0; axis < 3; ++axis) {
        double acc = 0.0;
        for (std::size_t j : members) acc += joints[(t * fine + j) * 3 + axis];
        out[(t * groups + g) * 3 + axis] = acc * inv;
      }
    }
  return out;
}

NDArray init_adjacency(std::size_t nodes, std::uint64_t seed) {
  if (nodes == 0) throw UsageError("init_adjacency: need at least one node");
  Rng rng(seed);
  return uniform_array({nodes, nodes}, 1.0 / std::sqrt(static_cast<double>(nodes)), rng);
}

Var mgd_gcl_forward(Var h, Var adjacency, Var weight, Activation act, bool residual) {
  const Shape& hs = h.shape();
  const Shape& as = adjacency.shape();
  const Shape& ws = weight.shape();
  if (hs.size() != 3 || as.size() != 2 || as[0] != as[1] || as[0] != hs[1] || ws.size() != 2 || ws[1] != hs[2]) {
    throw ShapeError("mgd_gcl_forward: features " + shape_str(hs) + " adjacency " + shape_str(as) + " weight " +
                     shape_str(ws));
  }
  Var mixed = ops::node_mix(adjacency, ops::linear(h, weight));
  Var out = act == Activation::kTanh ? ops::tanh(mixed) : mixed;
  if (residual && ws[0] == ws[1]) out = ops::add(out, h);
  return out;
}

void export_adjacency(const NDArray& adjacency, const std::vector<std::string>& names,
                      const std::filesystem::path& stem) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1) || adjacency.dim(0) != names.size()) {
    throw ShapeError("export_adjacency: matrix " + shape_str(adjacency.shape()) + " with " +
                     std::to_string(names.size()) + " names");
  }
  const std::size_t n = names.size();
  auto csv_path = stem;
  csv_path += ".csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << "node";
  for (const auto& name : names) csv << ',' << name;
  csv << '\n';
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    csv << names[i];
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", adjacency[i * n + j]);
      csv << ',' << buf;
    }
    csv << '\n';
  }
  if (!csv) throw DataError("write failed for " + csv_path.string());

  auto pgm_path = stem;
  pgm_path += ".pgm";
  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw DataError("cannot write " + pgm_path.string());
  pgm << "P5\n" << n << ' ' << n << "\n255\n";
  const auto bytes = heatmap_bytes(adjacency);
  pgm.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!pgm) throw DataError("write failed for " + pgm_path.string());
}

std::vector<std::uint8_t> heatmap_bytes(const NDArray& matrix) {
  std::vector<std::uint8_t> bytes(matrix.size(), 128);
  if (matrix.empty()) return bytes;
  const auto [lo, hi] = std::minmax_element(matrix.data().begin(), matrix.data().end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return bytes;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround((matrix[i] - *lo) / range * 255.0));
  }
  return bytes;
}

LabelledMatrix load_adjacency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty adjacency file");
  auto header = split(line);
  if (header.empty() || header[0] != "node") throw DataError(path.string() + ": header must start with 'node'");
  LabelledMatrix out;
  out.names.assign(header.begin() + 1, header.end());
  const std::size_t n = out.names.size();
  out.values = NDArray({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing row " + std::to_string(i));
    auto fields = split(line);
    if (fields.size() != n + 1 || fields[0] != out.names[i]) {
      throw DataError(path.string() + ": malformed row " + std::to_string(i + 2));
    }
    for (std::size_t j = 0; j < n; ++j) {
      try {
        out.values[i * n + j] = std::stod(fields[j + 1]);
      } catch (const std::exception&) {
        throw DataError(path.string() + ": bad number on line " + std::to_string(i + 2));
      }
    }
  }
  return out;
}

}  // namespace gaitphase
