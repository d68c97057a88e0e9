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

// Independent reference implementations used as test oracles. Everything
// here is deliberately naive: plain loops over the definitions, no shared
// code with the library beyond the NDArray container.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "gaitphase/ndarray.hpp"

namespace gaitphase::testing {

/// O(T^2) DFT straight from the sum, accumulated in long double.
inline std::vector<std::complex<double>> naive_dft(std::span<const double> h) {
  const std::size_t n = h.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t j = 0; j <= n / 2; ++j) {
    long double re = 0.0L;
    long double im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double angle =
          -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(j * t) / static_cast<long double>(n);
      re += static_cast<long double>(h[t]) * std::cos(angle);
      im += static_cast<long double>(h[t]) * std::sin(angle);
    }
    out[j] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

/// Amplitude, frequency and offset of one channel from the oracle DFT.
struct OracleSpectrum {
  double amplitude = 0.0;
  double frequency = 0.0;
  double offset = 0.0;
};

inline OracleSpectrum naive_spectrum(std::span<const double> h) {
  const auto c = naive_dft(h);
  const double n = static_cast<double>(h.size());
  double power = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 1; j <= h.size() / 2; ++j) {
    const double p = std::norm(c[j]);
    power += p;
    weighted += p * static_cast<double>(j) / n;
  }
  OracleSpectrum s;
  s.amplitude = std::sqrt(4.0 / (n * n) * power);
  s.frequency = power > 1e-12 ? weighted / power : 0.0;
  s.offset = c[0].real() / n;
  return s;
}

/// h'_i = act(sum_j A_ij W h_j) (+ h_i) for every sample and node, written
/// as explicit loops. h (B,n,c), A (n,n), W (o,c).
inline NDArray naive_gcl(const NDArray& h, const NDArray& a, const NDArray& w, bool tanh_act, bool residual) {
  const std::size_t batch = h.dim(0), n = h.dim(1), c = h.dim(2), o = w.dim(0);
  NDArray out({batch, n, o});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < o; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double wh = 0.0;
          for (std::size_t m = 0; m < c; ++m) wh += w.at({k, m}) * h.at({b, j, m});
          acc += a.at({i, j}) * wh;
        }
        double v = tanh_act ? std::tanh(acc) : acc;
        if (residual && o == c) v += h.at({b, i, k});
        out[(b * n + i) * o + k] = v;
      }
    }
  }
  return out;
}

/// One-vs-rest AUC of a single class by counting every positive/negative
/// pair: wins score 1, ties 1/2.
inline double pairwise_auc(std::span<const double> scores, std::span<const bool> positive) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Macro AUC over the classes that have both positives and negatives.
inline double pairwise_auc_macro(const NDArray& scores, std::span<const int> labels) {
  const std::size_t n = scores.dim(0), z = scores.dim(1);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < z; ++c) {
    std::vector<double> col(n);
    std::vector<char> pos(n);
    std::size_t npos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores[i * z + c];
      pos[i] = labels[i] == static_cast<int>(c);
      npos += pos[i] ? 1 : 0;
    }
    if (npos == 0 || npos == n) continue;
    std::unique_ptr<bool[]> flags(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) flags[i] = pos[i] != 0;
    total += pairwise_auc(col, std::span<const bool>(flags.get(), n));
    ++used;
  }
  return total / static_cast<double>(used);
}

inline double count_accuracy(std::span<const int> preds, std::span<const int> labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

/// Macro F1 from per-class TP/FP/FN counts; a class absent from both
/// predictions and labels scores 1.
inline double count_f1_macro(std::span<const int> preds, std::span<const int> labels, std::size_t classes) {
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const int k = static_cast<int>(c);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == k && labels[i] == k) tp += 1;
      if (preds[i] == k && labels[i] != k) fp += 1;
      if (preds[i] != k && labels[i] == k) fn += 1;
    }
    if (tp + fp + fn == 0) {
      total += 1.0;
      continue;
    }
    total += 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return total / static_cast<double>(classes);
}

}  // namespace gaitphase::testing
