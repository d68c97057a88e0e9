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
#include <string_view>
#include <vector>

#include "gaitphase/ops.hpp"
#include "gaitphase/random.hpp"
#include "gaitphase/tape.hpp"

namespace gaitphase {

/// Shape of the periodic autoencoder. `dims` is d = 3 * joints.
struct PeriodicConfig {
  std::size_t dims = 51;
  std::size_t channels = 8;
  std::size_t hidden = 32;
  std::size_t kernel = 7;
  std::size_t window = 60;
};

/// Registers compactor, phase predictor and restorer parameters:
///   compactor.conv{0,1}.{weight,bias}
///   phase.{weight,bias}
///   restorer.conv{0,1}.{weight,bias}
void init_periodic(ParamStore& params, const PeriodicConfig& config, Rng& rng);

/// V_t = X_{t+1} - X_t over frames (F, d) -> (F-1, d). Needs F >= 2.
NDArray compute_velocity(const NDArray& frames);

/// Two temporal convolutions with tanh after each: (B,d,T) -> (B,K,T).
Var compact(ParamBinder& bind, Var velocity);

struct SpectralParams {
  Var amplitude;  // (B,K)
  Var frequency;  // (B,K), cycles per frame
  Var offset;     // (B,K)
};

/// Amplitude, power-weighted mean frequency and DC offset of every latent
/// channel from its real DFT. latent (..., K, T) with T >= 4.
SpectralParams parameterize_fft(Var latent);

/// Per-channel dense map T -> 2 giving q, then P = atan2(q1, q0) / 2pi
/// wrapped to [-0.5, 0.5). Throws NumericalError naming the channel when
/// q = (0, 0).
Var predict_phase(ParamBinder& bind, Var latent);

/// A sin(2 pi (F t + P)) + O for t = 0..length-1; parameters (..., K)
/// give (..., K, length).
Var reconstruct_latent(Var amplitude, Var frequency, Var offset, Var phase, std::size_t length);

/// Mirror of the compactor, tanh between the convolutions and a linear
/// output: (B,K,T) -> (B,d,T).
Var restore(ParamBinder& bind, Var latent);

struct PeriodicOutput {
  Var latent;
  Var amplitude;
  Var frequency;
  Var offset;
  Var phase;
  Var reconstructed_latent;
  Var restored;
};

PeriodicOutput periodic_forward(ParamBinder& bind, Var velocity);

/// Plain per-window copy of the phase-manifold descriptors.
struct PhaseParams {
  std::vector<double> amplitude;
  std::vector<double> frequency;
  std::vector<double> offset;
  std::vector<double> phase;
};

/// Splits batched descriptors (B,K) into one PhaseParams per window.
std::vector<PhaseParams> extract_phase_params(const PeriodicOutput& out);

}  // namespace gaitphase
