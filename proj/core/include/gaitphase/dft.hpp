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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gaitphase {

/// Real-input DFT c_j = sum_t h_t exp(-2 pi i j t / T) for j = 0..T/2.
/// Radix-2 FFT for power-of-two lengths, direct summation otherwise.
/// Throws UsageError for T < 2.
std::vector<std::complex<double>> real_dft(std::span<const double> signal);

bool is_power_of_two(std::size_t n);

/// In-place iterative radix-2 complex FFT (forward sign). Size must be a
/// power of two.
void fft_radix2(std::span<std::complex<double>> data);

/// Cached cos/sin tables for the half-spectrum of length-T real signals,
/// laid out [bin][t]. Shared by the direct DFT and the DFT adjoint.
struct DftTable {
  std::size_t length = 0;
  std::size_t bins = 0;
  std::vector<double> cos;
  std::vector<double> sin;
};

const DftTable& dft_table(std::size_t length);

}  // namespace gaitphase
