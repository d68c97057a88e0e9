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

#include "gaitphase/metrics.hpp"

#include <algorithm>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>

#include "gaitphase/error.hpp"

namespace gaitphase {
namespace {

void check_pair(const char* what, std::span<const int> preds, std::span<const int> labels) {
  if (labels.empty()) throw UsageError(std::string(what) + ": empty input");
  if (preds.size() != labels.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
}

std::size_t infer_classes(std::span<const int> preds, std::span<const int> labels) {
  int top = 0;
  for (int v : preds) top = std::max(top, v);
  for (int v : labels) top = std::max(top, v);
  return static_cast<std::size_t>(top) + 1;
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_pair("accuracy", preds, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += preds[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t classes) {
  check_pair("confusion", preds, labels);
  ConfusionMatrix m(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes || preds[i] < 0 ||
        static_cast<std::size_t>(preds[i]) >= classes) {
      throw UsageError("confusion: label or prediction outside [0, " + std::to_string(classes) + ") at sample " +
                       std::to_string(i));
    }
    ++m[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
  }
  return m;
}

std::vector<double> f1_per_class(std::span<const int> preds, std::span<const int> labels, std::size_t classes) {
  const auto m = confusion(preds, labels, classes);
  std::vector<double> f1(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t tp = m[c][c];
    std::size_t fn = 0;
    std::size_t fp = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      if (k == c) continue;
      fn += m[c][k];
      fp += m[k][c];
    }
    if (tp == 0) {
      f1[c] = (fp + fn == 0) ? 1.0 : 0.0;
      continue;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    f1[c] = 2.0 * precision * recall / (precision + recall);
  }
  return f1;
}

double f1_macro(std::span<const int> preds, std::span<const int> labels, std::size_t classes) {
  check_pair("f1_macro", preds, labels);
  if (classes == 0) classes = infer_classes(preds, labels);
  const auto f1 = f1_per_class(preds, labels, classes);
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(classes);
}

double auc_binary(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("auc_binary: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) over tie groups.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw UsageError("auc_binary: need at least one positive and one negative");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double auc_macro(const NDArray& scores, std::span<const int> labels, std::vector<std::size_t>* skipped) {
  if (scores.rank() != 2 || scores.dim(0) != labels.size()) {
    throw ShapeError("auc_macro: scores " + shape_str(scores.shape()) + " for " + std::to_string(labels.size()) +
                     " labels");
  }
  if (labels.empty()) throw UsageError("auc_macro: empty input");
  const std::size_t n = scores.dim(0);
  const std::size_t z = scores.dim(1);
  double total = 0.0;
  std::size_t used = 0;
  std::vector<double> column(n);
  auto positive = std::make_unique<bool[]>(n);
  for (std::size_t c = 0; c < z; ++c) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = scores[i * z + c];
      positive[i] = labels[i] == static_cast<int>(c);
      pos += positive[i];
    }
    if (pos == 0 || pos == n) {
      std::cerr << "warning: auc: class " << c << " has no " << (pos == 0 ? "positives" : "negatives")
                << "; skipped\n";
      if (skipped) skipped->push_back(c);
      continue;
    }
    total += auc_binary(column, std::span<const bool>(positive.get(), n));
    ++used;
  }
  if (used == 0) throw UsageError("auc_macro: every class lacks positives or negatives");
  return total / static_cast<double>(used);
}

EvalResult evaluate(const NDArray& scores, std::span<const int> labels) {
  if (scores.rank() != 2 || scores.dim(0) != labels.size()) {
    throw ShapeError("evaluate: scores " + shape_str(scores.shape()) + " for " + std::to_string(labels.size()) +
                     " labels");
  }
  const std::size_t n = scores.dim(0);
  const std::size_t z = scores.dim(1);
  std::vector<int> preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = scores.raw() + i * z;
    preds[i] = static_cast<int>(std::max_element(row, row + z) - row);
  }
  EvalResult r;
  r.n_samples = n;
  r.accuracy = accuracy(preds, labels);
  r.f1_macro = f1_macro(preds, labels, z);
  r.confusion = confusion(preds, labels, z);
  r.auc_macro = auc_macro(scores, labels, &r.auc_skipped);
  return r;
}

}  // namespace gaitphase
