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

// Fixtures shared by the unit tests and the acceptance harness: the
// primitive gradient cases, the tiny model configuration and small batches
// of synthetic windows.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "gaitphase/data.hpp"
#include "gaitphase/graph.hpp"
#include "gaitphase/model.hpp"
#include "gaitphase/ndarray.hpp"
#include "gaitphase/ops.hpp"
#include "gaitphase/random.hpp"
#include "gaitphase/tape.hpp"
#include "helpers.hpp"

namespace gaitphase::testing {

// ---- primitive gradient cases -----------------------------------------------

struct GradCase {
  const char* name;
  std::vector<Shape> shapes;
  InputFn fn;
  double bound = 1.0;
  // Keeps inputs away from non-differentiable points.
  double offset = 0.0;
};

// Reduces any output to a scalar with fixed, non-uniform weights so every
// output entry contributes a distinct gradient.
inline Var weighted_sum(Var v) {
  Tape& tape = *v.tape;
  NDArray w(v.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.7 * static_cast<double>(i) + 0.3);
  return ops::sum_all(ops::mul(v, tape.constant(std::move(w))));
}

inline std::vector<GradCase> primitive_cases() {
  using V = const std::vector<Var>&;
  return {
      {"add_broadcast", {{3, 4}, {4}}, [](Tape&, V x) { return weighted_sum(ops::add(x[0], x[1])); }},
      {"sub_broadcast", {{2, 1, 3}, {4, 1}}, [](Tape&, V x) { return weighted_sum(ops::sub(x[0], x[1])); }},
      {"mul_broadcast", {{2, 3}, {2, 1}}, [](Tape&, V x) { return weighted_sum(ops::mul(x[0], x[1])); }},
      {"div", {{5}, {5}}, [](Tape&, V x) { return weighted_sum(ops::div(x[0], x[1])); }, 1.0, 2.0},
      {"div_guarded", {{5}, {5}}, [](Tape&, V x) { return weighted_sum(ops::div_guarded(x[0], x[1])); }, 1.0, 2.0},
      {"scale_shift_neg", {{4}}, [](Tape&, V x) { return weighted_sum(ops::neg(ops::shift(ops::scale(x[0], 3.0), 1.0))); }},
      {"square", {{6}}, [](Tape&, V x) { return weighted_sum(ops::square(x[0])); }},
      {"tanh", {{6}}, [](Tape&, V x) { return weighted_sum(ops::tanh(x[0])); }, 2.0},
      {"sin", {{6}}, [](Tape&, V x) { return weighted_sum(ops::sin(x[0])); }, 3.0},
      {"sqrt", {{6}}, [](Tape&, V x) { return weighted_sum(ops::sqrt(x[0])); }, 1.0, 2.0},
      {"atan2", {{6}, {6}}, [](Tape&, V x) { return weighted_sum(ops::atan2(x[0], x[1])); }, 1.0, 1.5},
      {"wrap_half", {{6}}, [](Tape&, V x) { return weighted_sum(ops::wrap_half(x[0])); }, 0.2},
      {"sum_axis", {{2, 3, 4}}, [](Tape&, V x) { return weighted_sum(ops::sum(x[0], 1)); }},
      {"mean_axis", {{2, 3, 4}}, [](Tape&, V x) { return weighted_sum(ops::mean(x[0], 2)); }},
      {"cumsum", {{2, 5}}, [](Tape&, V x) { return weighted_sum(ops::cumsum(x[0], 1)); }},
      {"reshape", {{2, 6}}, [](Tape&, V x) { return weighted_sum(ops::reshape(x[0], {3, 4})); }},
      {"concat", {{2, 3}, {2, 2}}, [](Tape&, V x) { return weighted_sum(ops::concat(x, 1)); }},
      {"slice", {{3, 7}}, [](Tape&, V x) { return weighted_sum(ops::slice(x[0], 1, 2, 4)); }},
      {"matmul", {{3, 4}, {4, 5}}, [](Tape&, V x) { return weighted_sum(ops::matmul(x[0], x[1])); }},
      {"linear", {{2, 3, 4}, {5, 4}, {5}}, [](Tape&, V x) { return weighted_sum(ops::linear(x[0], x[1], x[2])); }},
      {"node_mix", {{5, 5}, {2, 5, 3}}, [](Tape&, V x) { return weighted_sum(ops::node_mix(x[0], x[1])); }},
      {"conv1d", {{2, 3, 8}, {4, 3, 3}, {4}}, [](Tape&, V x) { return weighted_sum(ops::conv1d(x[0], x[1], x[2])); }},
      {"channel_linear", {{2, 3, 6}, {3, 2, 6}, {3, 2}},
       [](Tape&, V x) { return weighted_sum(ops::channel_linear(x[0], x[1], x[2])); }},
      {"real_dft_pow2", {{2, 8}}, [](Tape&, V x) { return weighted_sum(ops::real_dft(x[0])); }},
      {"real_dft_odd", {{9}}, [](Tape&, V x) { return weighted_sum(ops::real_dft(x[0])); }},
      {"real_dft_60", {{60}}, [](Tape&, V x) { return weighted_sum(ops::real_dft(x[0])); }},
      {"softmax", {{3, 4}}, [](Tape&, V x) { return weighted_sum(ops::softmax(x[0])); }, 2.0},
      {"log_softmax", {{3, 4}}, [](Tape&, V x) { return weighted_sum(ops::log_softmax(x[0])); }, 2.0},
  };
}

/// Random inputs for one case and seed; a positive offset on the last input
/// keeps sqrt/div denominators away from zero.
inline std::vector<NDArray> grad_case_inputs(const GradCase& c, std::uint64_t seed) {
  std::vector<NDArray> inputs;
  for (std::size_t i = 0; i < c.shapes.size(); ++i) {
    NDArray x = random_array(c.shapes[i], derive_seed(seed, i), c.bound);
    if (c.offset != 0.0 && i + 1 == c.shapes.size())
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = c.offset + std::abs(x[k]);
    inputs.push_back(std::move(x));
  }
  return inputs;
}

// ---- tiny model -------------------------------------------------------------

/// 17 joints, T=8, K=2, hidden 16, 2 layers, 3 classes; the periodic widths
/// are shrunk too so finite differences stay fast.
inline ModelConfig tiny_config(std::uint64_t seed = 0) {
  ModelConfig c;
  c.window = 8;
  c.channels = 2;
  c.hidden = 16;
  c.layers = 2;
  c.classes = 3;
  c.fusion_dim = 8;
  c.compactor_hidden = 4;
  c.kernel = 3;
  c.seed = seed;
  return c;
}

/// Normalized synthetic windows of T+1 frames with their class labels.
struct Windows {
  std::vector<GaitWindow> windows;
  std::vector<int> labels;

  std::vector<const GaitWindow*> pointers() const {
    std::vector<const GaitWindow*> out;
    for (const auto& w : windows) out.push_back(&w);
    return out;
  }
};

inline Windows sample_windows(std::size_t classes, std::size_t window, std::size_t count, std::uint64_t seed) {
  SynthSpec spec;
  spec.classes = classes;
  spec.per_class = 2;
  spec.frames = window + 1 + 3 * count;
  const MultiScaleGraph g = build_multiscale_graph();
  Windows out;
  const auto seqs = synth_generate(spec, seed);
  for (std::size_t i = 0; i < seqs.size() && out.windows.size() < count; ++i) {
    for (auto& w : make_windows(normalize(seqs[i], g), window, 3)) {
      if (out.windows.size() == count) break;
      out.windows.push_back(std::move(w));
      out.labels.push_back(static_cast<int>(i / spec.per_class));
    }
  }
  return out;
}

inline Batch batch_for(const GaitModel& model, const Windows& w) {
  const auto ptrs = w.pointers();
  return make_batch(model.config(), model.graph(), ptrs, w.labels);
}

}  // namespace gaitphase::testing
