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

#include "gaitphase/dft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "gaitphase/error.hpp"

namespace gaitphase {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw UsageError("fft_radix2: length " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles from the exact angle rather than a running product keep
        // the error at O(eps log n).
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto even = data[start + k];
        const auto odd = data[start + k + len / 2] * w;
        data[start + k] = even + odd;
        data[start + k + len / 2] = even - odd;
      }
    }
  }
}

const DftTable& dft_table(std::size_t length) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<DftTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[length];
  if (!slot) {
    auto table = std::make_unique<DftTable>();
    table->length = length;
    table->bins = length / 2 + 1;
    table->cos.resize(table->bins * length);
    table->sin.resize(table->bins * length);
    for (std::size_t j = 0; j < table->bins; ++j) {
      for (std::size_t t = 0; t < length; ++t) {
        // Reduce j*t mod T first so the angle stays in [0, 2 pi).
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>((j * t) % length) / static_cast<double>(length);
        table->cos[j * length + t] = std::cos(angle);
        table->sin[j * length + t] = std::sin(angle);
      }
    }
    slot = std::move(table);
  }
  return *slot;
}

std::vector<std::complex<double>> real_dft(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 2) throw UsageError("real_dft: need at least 2 samples, got " + std::to_string(n));
  const std::size_t bins = n / 2 + 1;
  std::vector<std::complex<double>> out(bins);
  if (is_power_of_two(n)) {
    std::vector<std::complex<double>> buf(signal.begin(), signal.end());
    fft_radix2(buf);
    std::copy_n(buf.begin(), bins, out.begin());
    return out;
  }
  const DftTable& table = dft_table(n);
  for (std::size_t j = 0; j < bins; ++j) {
    double re = 0.0;
    double im = 0.0;
    const double* c = &table.cos[j * n];
    const double* s = &table.sin[j * n];
    for (std::size_t t = 0; t < n; ++t) {
      re += signal[t] * c[t];
      im -= signal[t] * s[t];
    }
    out[j] = {re, im};
  }
  return out;
}

}  // namespace gaitphase
