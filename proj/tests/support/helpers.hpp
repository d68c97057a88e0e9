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

// Shared test utilities: finite-difference gradient checks, scratch
// directories and sequence-file mutation for fuzzing.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gaitphase/ndarray.hpp"
#include "gaitphase/random.hpp"
#include "gaitphase/tape.hpp"

namespace gaitphase::testing {

inline constexpr double kFdStep = 1e-5;

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "input[i]" or parameter name with flat index
};

/// Builds a scalar from leaf Vars on a fresh tape.
using InputFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Central differences on every entry of every input.
inline GradReport check_input_gradients(const InputFn& fn, std::vector<NDArray> inputs, double step = kFdStep) {
  auto evaluate = [&](const std::vector<NDArray>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    return fn(tape, vars).value().item();
  };
  // Analytic: leaves must require grad, so bind them as parameters.
  std::vector<std::unique_ptr<Parameter>> params;
  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    params.push_back(std::make_unique<Parameter>(Parameter{"input" + std::to_string(i), inputs[i], NDArray()}));
    vars.push_back(tape.param(*params.back()));
  }
  tape.backward(fn(tape, vars));

  GradReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double keep = inputs[i][k];
      inputs[i][k] = keep + step;
      const double up = evaluate(inputs);
      inputs[i][k] = keep - step;
      const double down = evaluate(inputs);
      inputs[i][k] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = params[i]->grad.empty() ? 0.0 : params[i]->grad[k];
      const double err = relative_error(analytic, numeric);
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = "input" + std::to_string(i) + "[" + std::to_string(k) + "]";
      }
    }
  }
  return report;
}

/// Scalar built from bound parameters.
using ParamFn = std::function<Var(ParamBinder&)>;

/// Central differences over parameters. With `per_param_limit` > 0 only
/// that many randomly chosen entries of each larger tensor are probed;
/// every tensor is always covered.
inline GradReport check_param_gradients(const ParamFn& fn, ParamStore& store, std::size_t per_param_limit = 0,
                                        std::uint64_t seed = 0, double step = kFdStep) {
  store.zero_grad();
  {
    Tape tape;
    ParamBinder bind(tape, store);
    tape.backward(fn(bind));
  }
  auto evaluate = [&]() {
    Tape tape;
    ParamBinder bind(tape, static_cast<const ParamStore&>(store));
    return fn(bind).value().item();
  };
  Rng rng(seed);
  GradReport report;
  for (auto& p : store) {
    std::vector<std::size_t> entries(p->value.size());
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = k;
    if (per_param_limit > 0 && entries.size() > per_param_limit) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(per_param_limit);
    }
    for (std::size_t k : entries) {
      const double keep = p->value[k];
      p->value[k] = keep + step;
      const double up = evaluate();
      p->value[k] = keep - step;
      const double down = evaluate();
      p->value[k] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad.empty() ? 0.0 : p->grad[k];
      const double err = relative_error(analytic, numeric);
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return report;
}

inline NDArray random_array(Shape shape, std::uint64_t seed, double bound = 1.0) {
  Rng rng(seed);
  return uniform_array(std::move(shape), bound, rng);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "gaitphase") {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

enum class Mutation { kTruncate, kNonFinite, kDropValue, kExtraValue, kGarbageNumber, kDropHeaderField };

inline const char* to_string(Mutation m) {
  switch (m) {
    case Mutation::kTruncate: return "truncate";
    case Mutation::kNonFinite: return "non-finite";
    case Mutation::kDropValue: return "drop-value";
    case Mutation::kExtraValue: return "extra-value";
    case Mutation::kGarbageNumber: return "garbage-number";
    case Mutation::kDropHeaderField: return "drop-header-field";
  }
  return "?";
}

/// One corrupted variant of a valid sequence file. Each mutation makes the
/// text invalid by construction.
inline std::string mutate_sequence(const std::string& text, Mutation kind, std::mt19937_64& rng) {
  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i + 1 < text.size(); ++i)
    if (text[i] == '\n') line_starts.push_back(i + 1);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  // A data row (never the header) and the byte range of one of its values.
  auto pick_value = [&](std::size_t& begin, std::size_t& end) {
    const std::size_t row = pick(1, line_starts.size() - 1);
    const std::size_t row_begin = line_starts[row];
    const std::size_t row_end = text.find('\n', row_begin);
    std::vector<std::size_t> starts{row_begin};
    for (std::size_t i = row_begin; i < row_end; ++i)
      if (text[i] == ',') starts.push_back(i + 1);
    const std::size_t v = pick(0, starts.size() - 1);
    begin = starts[v];
    end = v + 1 < starts.size() ? starts[v + 1] - 1 : row_end;
  };
  std::size_t b = 0, e = 0;
  switch (kind) {
    case Mutation::kTruncate:
      return text.substr(0, pick(0, text.size() - 1));
    case Mutation::kNonFinite: {
      static const char* kBad[] = {"nan", "NaN", "inf", "-inf", "1e999", "-nan"};
      pick_value(b, e);
      return text.substr(0, b) + kBad[pick(0, 5)] + text.substr(e);
    }
    case Mutation::kDropValue: {
      pick_value(b, e);
      // Remove the value together with one adjacent comma.
      if (e < text.size() && text[e] == ',') return text.substr(0, b) + text.substr(e + 1);
      return text.substr(0, b - 1) + text.substr(e);
    }
    case Mutation::kExtraValue: {
      pick_value(b, e);
      return text.substr(0, e) + ",0.5" + text.substr(e);
    }
    case Mutation::kGarbageNumber: {
      static const char* kBad[] = {"abc", "1.2.3", "", "0x", "--1", "1e", " 1"};
      pick_value(b, e);
      return text.substr(0, b) + kBad[pick(0, 6)] + text.substr(e);
    }
    case Mutation::kDropHeaderField: {
      static const char* kFields[] = {"#gaitseq", "v1", "subject=", "fps=", "joints="};
      const std::string field = kFields[pick(0, 4)];
      const std::size_t at = text.find(field);
      std::size_t stop = text.find_first_of(",\n", at);
      if (text[stop] == ',') ++stop;
      return text.substr(0, at) + text.substr(stop);
    }
  }
  return text;
}

}  // namespace gaitphase::testing
