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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitphase/graph.hpp"
#include "gaitphase/ndarray.hpp"

namespace gaitphase {

/// One recorded walk: frames (T_raw, J, 3).
struct SkeletonSequence {
  std::string subject_id;
  double fps = 30.0;
  std::string environment;
  NDArray frames;

  std::size_t frame_count() const { return frames.empty() ? 0 : frames.dim(0); }
  std::size_t joint_count() const { return frames.empty() ? 0 : frames.dim(1); }
};

/// T+1 raw frames flattened to (T+1, 3J) plus the label.
struct GaitWindow {
  NDArray frames;
  double fps = 30.0;
  std::string subject_id;
  std::size_t sequence_index = 0;
  std::size_t start_frame = 0;
};

// ---- sequence files ---------------------------------------------------------
//
// Line 1:  #gaitseq,v1,subject=<id>,fps=<f>,joints=<J>[,frames=<n>][,env=<tag>]
// Then one row per frame with 3J comma-separated values, joint-major
// (j0x,j0y,j0z,j1x,...). Every line, including the last, ends in '\n'.
// The writer always emits frames=; when present the loader checks it.

void write_sequence(const SkeletonSequence& seq, const std::filesystem::path& path);
std::string format_sequence(const SkeletonSequence& seq);

/// Throws ParseError (with kind and line) on any malformed content.
SkeletonSequence parse_sequence(const std::string& text, std::size_t expected_joints = 17);
SkeletonSequence load_sequence(const std::filesystem::path& path, std::size_t expected_joints = 17);

// ---- manifest ---------------------------------------------------------------

struct ManifestItem {
  std::string path;
  std::string subject;
  std::string split;
};

struct DatasetManifest {
  std::map<std::string, int> classes;
  std::vector<ManifestItem> items;

  int class_of(const std::string& subject) const;
  std::size_t class_count() const { return classes.size(); }
  /// Class indices must be contiguous from 0; throws DataError otherwise.
  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// ---- preprocessing ----------------------------------------------------------

/// Root-centres every frame on the pelvis and divides by the median
/// pelvis-thorax distance. Throws DataError when that median is zero.
SkeletonSequence normalize(const SkeletonSequence& seq, const MultiScaleGraph& graph);

/// Windows of T+1 frames every `stride` frames. Too-short sequences give an
/// empty list (and a warning on stderr).
std::vector<GaitWindow> make_windows(const SkeletonSequence& seq, std::size_t window, std::size_t stride,
                                     std::size_t sequence_index = 0);

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Per subject: shuffle its items with the seed, the first
/// clamp(round(ratio n), 1, n-1) go to train. Subjects with a single
/// sequence are rejected.
SplitResult split_stratified(const DatasetManifest& manifest, double ratio, std::uint64_t seed);

/// Items whose environment equals the lexicographically last tag go to val.
SplitResult split_by_environment(const std::vector<std::string>& environments);

// ---- synthetic corpus -------------------------------------------------------

struct ClassSignature {
  double stride_hz = 1.0;
  double leg_amplitude = 1.0;
  double arm_amplitude = 1.0;
  double knee_amplitude = 1.0;
  double arm_phase = 0.0;   // extra radians on top of the pi arm/leg offset
  double lean = 0.0;        // forward torso lean, metres at the head
  double stance = 0.0;      // extra half-width of the stance, metres
};

struct SynthSpec {
  std::size_t classes = 6;
  std::size_t per_class = 8;
  double fps = 30.0;
  std::size_t frames = 181;
  double noise = 0.02;
  double freq_min = 0.8;
  double freq_max = 1.4;
  /// Signatures differ only in stride frequency.
  bool frequency_only = false;
  /// Noise multiplier per environment; sequences cycle through them.
  std::vector<double> environment_noise = {1.0, 1.5};
  /// Random per-sequence jitter of frequency and amplitude (fractions).
  double frequency_jitter = 0.02;
  double amplitude_jitter = 0.05;
  /// Optional explicit signatures; generated from the ranges when empty.
  std::vector<ClassSignature> signatures;
};

/// Signature of each class derived from the SynthSpec ranges and the seed.
std::vector<ClassSignature> synth_signatures(const SynthSpec& spec, std::uint64_t seed);

/// Sinusoidal walking model: legs in antiphase at the class stride
/// frequency, each arm in antiphase with its same-side leg, plus Gaussian
/// noise. Deterministic in (spec, seed). Throws UsageError when any
/// frequency reaches Nyquist.
std::vector<SkeletonSequence> synth_generate(const SynthSpec& spec, std::uint64_t seed);

std::string subject_name(std::size_t class_index);

}  // namespace gaitphase
