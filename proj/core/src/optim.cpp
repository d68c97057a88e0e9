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

#include "gaitphase/optim.hpp"

#include <cmath>
#include <numbers>

#include "gaitphase/error.hpp"

namespace gaitphase {

void adam_step(ParamStore& params, AdamState& state, double lr, const AdamOptions& options) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("adam_step: learning rate must be >= 0");
  for (const auto& p : params) {
    if (!p->grad.all_finite()) throw NumericalError("adam_step: non-finite gradient in parameter '" + p->name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (auto& p : params) {
    auto& m = state.m[p->name];
    auto& v = state.v[p->name];
    if (m.shape() != p->value.shape()) m = NDArray(p->value.shape());
    if (v.shape() != p->value.shape()) v = NDArray(p->value.shape());
    auto value = p->value.data();
    auto grad = p->grad.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
    p->grad.fill(0.0);
  }
}

double cosine_lr(int epoch, int total_epochs, double lr0) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw UsageError("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(total_epochs) +
                     ")");
  }
  if (total_epochs == 1) return lr0;
  constexpr double lr_min = 0.0;
  const double progress = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace gaitphase
