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

#include "gaitphase/periodic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gaitphase/error.hpp"

namespace gaitphase {
namespace {

void add_conv(ParamStore& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
              Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
  params.add(name + ".weight", uniform_array({out, in, kernel}, bound, rng));
  params.add(name + ".bias", uniform_array({out}, bound, rng));
}

Var conv(ParamBinder& bind, const std::string& name, Var x) {
  return ops::conv1d(x, bind(name + ".weight"), bind(name + ".bias"));
}

// Appends a trailing unit axis so (..., K) broadcasts against (T).
Var unsqueeze_last(Var v) {
  Shape s = v.shape();
  s.push_back(1);
  return ops::reshape(v, s);
}

// Drops a trailing unit axis.
Var squeeze_last(Var v) {
  Shape s = v.shape();
  s.pop_back();
  return ops::reshape(v, s);
}

}  // namespace

void init_periodic(ParamStore& params, const PeriodicConfig& config, Rng& rng) {
  if (config.kernel % 2 == 0) throw UsageError("periodic: kernel size must be odd");
  if (config.window < 4) throw UsageError("periodic: window must be >= 4 frames");
  add_conv(params, "compactor.conv0", config.dims, config.hidden, config.kernel, rng);
  add_conv(params, "compactor.conv1", config.hidden, config.channels, config.kernel, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.window));
  params.add("phase.weight", uniform_array({config.channels, 2, config.window}, bound, rng));
  params.add("phase.bias", uniform_array({config.channels, 2}, bound, rng));
  add_conv(params, "restorer.conv0", config.channels, config.hidden, config.kernel, rng);
  add_conv(params, "restorer.conv1", config.hidden, config.dims, config.kernel, rng);
}

NDArray compute_velocity(const NDArray& frames) {
  if (frames.rank() != 2) throw ShapeError("compute_velocity: expected (frames, d), got " + shape_str(frames.shape()));
  const std::size_t n = frames.dim(0);
  const std::size_t d = frames.dim(1);
  if (n < 2) throw DataError("compute_velocity: need at least 2 frames, got " + std::to_string(n));
  NDArray out({n - 1, d});
  for (std::size_t t = 0; t + 1 < n; ++t)
    for (std::size_t j = 0; j < d; ++j) out[t * d + j] = frames[(t + 1) * d + j] - frames[t * d + j];
  return out;
}

Var compact(ParamBinder& bind, Var velocity) {
  Var h = ops::tanh(conv(bind, "compactor.conv0", velocity));
  return ops::tanh(conv(bind, "compactor.conv1", h));
}

SpectralParams parameterize_fft(Var latent) {
  const Shape& s = latent.shape();
  if (s.empty() || s.back() < 4) {
    throw ShapeError("parameterize_fft: need a time axis of length >= 4, got " + shape_str(s));
  }
  const std::size_t len = s.back();
  const std::size_t half = len / 2;
  Tape& tape = *latent.tape;

  Var coeffs = ops::real_dft(latent);                        // (..., bins, 2)
  const std::size_t bin_axis = coeffs.shape().size() - 2;
  Var power = ops::sum(ops::square(coeffs), bin_axis + 1);   // (..., bins)
  Var ac_power = ops::slice(power, bin_axis, 1, half);       // (..., T/2)
  Var total = ops::sum(ac_power, bin_axis);                  // (...)

  const double len_d = static_cast<double>(len);
  Var amplitude = ops::sqrt(ops::scale(total, 4.0 / (len_d * len_d)));

  NDArray bin_freq({half});
  for (std::size_t j = 0; j < half; ++j) bin_freq[j] = static_cast<double>(j + 1) / len_d;
  Var weighted = ops::sum(ops::mul(ac_power, tape.constant(std::move(bin_freq))), bin_axis);
  Var frequency = ops::div_guarded(weighted, total, 1e-12);

  Var dc = ops::slice(ops::slice(coeffs, bin_axis, 0, 1), bin_axis + 1, 0, 1);  // (..., 1, 1)
  Shape dc_shape(s.begin(), s.end() - 1);
  Var offset = ops::scale(ops::reshape(dc, dc_shape), 1.0 / len_d);
  return {amplitude, frequency, offset};
}

Var predict_phase(ParamBinder& bind, Var latent) {
  const Shape& s = latent.shape();
  const bool batched = s.size() == 3;
  if (s.size() != 2 && s.size() != 3) throw ShapeError("predict_phase: expected (B,K,T) or (K,T), got " + shape_str(s));
  Var x = batched ? latent : ops::reshape(latent, {1, s[0], s[1]});
  Var q = ops::channel_linear(x, bind("phase.weight"), bind("phase.bias"));  // (B,K,2)
  const NDArray& qv = q.value();
  const std::size_t chans = qv.dim(1);
  for (std::size_t i = 0; i < qv.size(); i += 2) {
    if (qv[i] == 0.0 && qv[i + 1] == 0.0) {
      throw NumericalError("predict_phase: phase vector is (0, 0) for channel " + std::to_string((i / 2) % chans));
    }
  }
  const std::size_t last = 2;
  Var q0 = squeeze_last(ops::slice(q, last, 0, 1));
  Var q1 = squeeze_last(ops::slice(q, last, 1, 1));
  Var phase = ops::wrap_half(ops::scale(ops::atan2(q1, q0), 0.5 / std::numbers::pi));
  return batched ? phase : ops::reshape(phase, {s[0]});
}

Var reconstruct_latent(Var amplitude, Var frequency, Var offset, Var phase, std::size_t length) {
  const Shape& s = amplitude.shape();
  if (frequency.shape() != s || offset.shape() != s || phase.shape() != s) {
    throw ShapeError("reconstruct_latent: parameter shapes " + shape_str(s) + ", " + shape_str(frequency.shape()) +
                     ", " + shape_str(offset.shape()) + ", " + shape_str(phase.shape()));
  }
  if (length == 0) throw ShapeError("reconstruct_latent: zero length");
  NDArray frames({length});
  for (std::size_t t = 0; t < length; ++t) frames[t] = static_cast<double>(t);
  Tape& tape = *amplitude.tape;
  Var cycles = ops::add(ops::mul(unsqueeze_last(frequency), tape.constant(std::move(frames))), unsqueeze_last(phase));
  Var wave = ops::sin(ops::scale(cycles, 2.0 * std::numbers::pi));
  return ops::add(ops::mul(unsqueeze_last(amplitude), wave), unsqueeze_last(offset));
}

Var restore(ParamBinder& bind, Var latent) {
  Var h = ops::tanh(conv(bind, "restorer.conv0", latent));
  return conv(bind, "restorer.conv1", h);
}

PeriodicOutput periodic_forward(ParamBinder& bind, Var velocity) {
  PeriodicOutput out;
  out.latent = compact(bind, velocity);
  const auto spectral = parameterize_fft(out.latent);
  out.amplitude = spectral.amplitude;
  out.frequency = spectral.frequency;
  out.offset = spectral.offset;
  out.phase = predict_phase(bind, out.latent);
  out.reconstructed_latent =
      reconstruct_latent(out.amplitude, out.frequency, out.offset, out.phase, out.latent.shape().back());
  out.restored = restore(bind, out.reconstructed_latent);
  return out;
}

std::vector<PhaseParams> extract_phase_params(const PeriodicOutput& out) {
  const NDArray& a = out.amplitude.value();
  const NDArray& f = out.frequency.value();
  const NDArray& o = out.offset.value();
  const NDArray& p = out.phase.value();
  const std::size_t chans = a.shape().back();
  const std::size_t windows = a.size() / chans;
  std::vector<PhaseParams> result(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    auto range = [&](const NDArray& x) {
      return std::vector<double>(x.raw() + w * chans, x.raw() + (w + 1) * chans);
    };
    result[w] = {range(a), range(f), range(o), range(p)};
  }
  return result;
}

}  // namespace gaitphase
