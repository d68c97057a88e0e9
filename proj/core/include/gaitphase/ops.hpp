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

#include "gaitphase/tape.hpp"

/// Differentiable primitives. Every op records its output on the operands'
/// tape with a backward rule; shape problems raise ShapeError naming the op
/// and the offending shapes, non-finite outputs raise NumericalError.
namespace gaitphase::ops {

// Elementwise binary ops broadcast with right-aligned (numpy) rules.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Throws NumericalError where |b| < 1e-12.
Var div(Var a, Var b);
/// a / b, but 0 with zero gradient wherever |b| < eps.
Var div_guarded(Var a, Var b, double eps = 1e-12);

Var scale(Var a, double factor);
Var shift(Var a, double offset);
Var neg(Var a);
Var square(Var a);
Var tanh(Var a);
Var sin(Var a);
/// sqrt; negative input throws. The derivative at 0 is taken as 0.
Var sqrt(Var a);
/// atan2(y, x) elementwise on equal shapes; (0, 0) throws NumericalError.
Var atan2(Var y, Var x);
/// Maps values into [-0.5, 0.5) by adding an integer; gradient is identity.
Var wrap_half(Var a);

Var sum(Var a, std::size_t axis);
Var mean(Var a, std::size_t axis);
Var sum_all(Var a);
Var mean_all(Var a);
Var cumsum(Var a, std::size_t axis);

Var reshape(Var a, Shape shape);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);

/// (m,k) x (k,n).
Var matmul(Var a, Var b);
/// x (..., in) * W(out, in)^T + b(out). Pass an invalid Var to skip the bias.
Var linear(Var x, Var weight, Var bias = {});
/// Per-sample left multiplication by a square node matrix:
/// adjacency (n,n), x (B,n,c) -> (B,n,c).
Var node_mix(Var adjacency, Var x);
/// Temporal convolution, stride 1, zero "same" padding, odd kernel.
/// x (B,C,T), weight (O,C,k), bias (O) -> (B,O,T).
Var conv1d(Var x, Var weight, Var bias);
/// Independent dense map per channel: x (B,K,T), weight (K,O,T), bias (K,O)
/// -> (B,K,O).
Var channel_linear(Var x, Var weight, Var bias);
/// Real DFT along the last axis: (..., T) -> (..., T/2+1, 2) with the last
/// axis holding (Re, Im). T >= 2.
Var real_dft(Var h);

Var softmax(Var a);
Var log_softmax(Var a);

}  // namespace gaitphase::ops
