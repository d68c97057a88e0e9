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

#include <cstdint>
#include <map>
#include <string>

#include "gaitphase/tape.hpp"

namespace gaitphase {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates keyed by parameter name.
struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, NDArray> m;
  std::map<std::string, NDArray> v;
};

/// One bias-corrected Adam update over every parameter in `params`, then
/// zeroes the gradients. Throws NumericalError naming the first parameter
/// with a non-finite gradient (before any parameter is touched).
void adam_step(ParamStore& params, AdamState& state, double lr, const AdamOptions& options = {});

/// Cosine annealing from lr0 at epoch 0 down to 0 at the last epoch.
double cosine_lr(int epoch, int total_epochs, double lr0);

}  // namespace gaitphase
