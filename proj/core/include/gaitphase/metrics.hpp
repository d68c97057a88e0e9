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
#include <span>
#include <vector>

#include "gaitphase/ndarray.hpp"

namespace gaitphase {

/// confusion[i][j] = samples of true class i predicted as j.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

struct EvalResult {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double auc_macro = 0.0;
  ConfusionMatrix confusion;
  std::size_t n_samples = 0;
  /// Classes skipped by the AUC for lacking positives or negatives.
  std::vector<std::size_t> auc_skipped;
};

double accuracy(std::span<const int> preds, std::span<const int> labels);

/// One-vs-rest F1 per class, macro-averaged over `classes` classes
/// (inferred from the data when 0). A class with TP = FP = FN = 0 scores 1.
double f1_macro(std::span<const int> preds, std::span<const int> labels, std::size_t classes = 0);
std::vector<double> f1_per_class(std::span<const int> preds, std::span<const int> labels, std::size_t classes);

/// One-vs-rest Mann-Whitney AUC per class (ties count 1/2), macro-averaged.
/// scores is (n, z). Classes without positives or negatives are skipped and
/// reported through `skipped`; all skipped throws.
double auc_macro(const NDArray& scores, std::span<const int> labels, std::vector<std::size_t>* skipped = nullptr);

/// Rank-sum AUC for one binary problem.
double auc_binary(std::span<const double> scores, std::span<const bool> positive);

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t classes);

/// Argmax of each score row, then every metric above.
EvalResult evaluate(const NDArray& scores, std::span<const int> labels);

}  // namespace gaitphase
