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

#include "gaitphase/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "gaitphase/dft.hpp"
#include "gaitphase/error.hpp"

namespace gaitphase::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

constexpr double kDivEps = 1e-12;

Tape& tape_of(const char* op, Var a) {
  if (!a.valid()) throw UsageError(std::string(op) + ": invalid variable");
  return *a.tape;
}

Tape& tape_of(const char* op, Var a, Var b) {
  Tape& t = tape_of(op, a);
  if (b.tape != &t) throw UsageError(std::string(op) + ": operands live on different tapes");
  return t;
}

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

std::string shapes(const Shape& a, const Shape& b) { return shape_str(a) + " vs " + shape_str(b); }

// Splits a shape around `axis` into (outer, axis length, inner).
struct AxisView {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const char* op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) shape_fail(op, "axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

BroadcastPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t r = std::max(a.size(), b.size());
  p.out.assign(r, 1);
  p.stride_a.assign(r, 0);
  p.stride_b.assign(r, 0);
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  for (std::size_t i = 0; i < r; ++i) {
    const bool has_a = i >= r - a.size();
    const bool has_b = i >= r - b.size();
    const std::size_t da = has_a ? a[i - (r - a.size())] : 1;
    const std::size_t db = has_b ? b[i - (r - b.size())] : 1;
    if (da != db && da != 1 && db != 1) shape_fail(op, "cannot broadcast " + shapes(a, b));
    p.out[i] = std::max(da, db);
    if (has_a && da != 1) p.stride_a[i] = sa[i - (r - a.size())];
    if (has_b && db != 1) p.stride_b[i] = sb[i - (r - b.size())];
  }
  return p;
}

template <class F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
  const std::size_t n = shape_size(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  const std::size_t r = p.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t io = 0; io < n; ++io) {
    f(io, ia, ib);
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      ia += p.stride_a[ax];
      ib += p.stride_b[ax];
      if (idx[ax] < p.out[ax]) break;
      ia -= p.stride_a[ax] * p.out[ax];
      ib -= p.stride_b[ax] * p.out[ax];
      idx[ax] = 0;
    }
  }
}

// fwd(x, y) -> z; da(x, y, z) -> dz/dx; db(x, y, z) -> dz/dy.
template <class Fwd, class DA, class DB>
Var binary(const char* op, Var a, Var b, Fwd fwd, DA da, DB db) {
  Tape& t = tape_of(op, a, b);
  const NDArray& x = t.value(a);
  const NDArray& y = t.value(b);
  BroadcastPlan plan = plan_broadcast(op, x.shape(), y.shape());
  NDArray out(plan.out);
  for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) { out[io] = fwd(x[ia], y[ib]); });
  const std::uint32_t ida = a.id;
  const std::uint32_t idb = b.id;
  return t.record(op, std::move(out), {ida, idb},
                  [plan = std::move(plan), ida, idb, da, db](Tape& tp, std::uint32_t self) {
                    const NDArray& x = tp.value(ida);
                    const NDArray& y = tp.value(idb);
                    const NDArray& z = tp.value(self);
                    const NDArray& g = tp.grad(self);
                    if (tp.requires_grad(ida)) {
                      NDArray& gx = tp.grad(ida);
                      for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
                        gx[ia] += g[io] * da(x[ia], y[ib], z[io]);
                      });
                    }
                    if (tp.requires_grad(idb)) {
                      NDArray& gy = tp.grad(idb);
                      for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
                        gy[ib] += g[io] * db(x[ia], y[ib], z[io]);
                      });
                    }
                  });
}

// fwd(x) -> y; d(x, y) -> dy/dx.
template <class Fwd, class D>
Var unary(const char* op, Var a, Fwd fwd, D d) {
  Tape& t = tape_of(op, a);
  const NDArray& x = t.value(a);
  NDArray out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  const std::uint32_t ida = a.id;
  return t.record(op, std::move(out), {ida}, [ida, d](Tape& tp, std::uint32_t self) {
    const NDArray& x = tp.value(ida);
    const NDArray& y = tp.value(self);
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * d(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  Tape& t = tape_of("div", a, b);
  for (double v : t.value(b).data()) {
    if (std::abs(v) < kDivEps) {
      throw NumericalError("div: denominator magnitude " + std::to_string(std::abs(v)) +
                           " below 1e-12; use div_guarded");
    }
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Var div_guarded(Var a, Var b, double eps) {
  return binary(
      "div_guarded", a, b, [eps](double x, double y) { return std::abs(y) < eps ? 0.0 : x / y; },
      [eps](double, double y, double) { return std::abs(y) < eps ? 0.0 : 1.0 / y; },
      [eps](double x, double y, double) { return std::abs(y) < eps ? 0.0 : -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var shift(Var a, double offset) {
  return unary(
      "shift", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sin(Var a) {
  return unary(
      "sin", a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var sqrt(Var a) {
  Tape& t = tape_of("sqrt", a);
  for (double v : t.value(a).data()) {
    if (v < 0.0) throw NumericalError("sqrt: negative input " + std::to_string(v));
  }
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var atan2(Var y, Var x) {
  Tape& t = tape_of("atan2", y, x);
  const NDArray& yv = t.value(y);
  const NDArray& xv = t.value(x);
  if (yv.shape() != xv.shape()) shape_fail("atan2", shapes(yv.shape(), xv.shape()));
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (yv[i] == 0.0 && xv[i] == 0.0) {
      throw NumericalError("atan2: undefined at (0, 0), element " + std::to_string(i));
    }
  }
  return binary(
      "atan2", y, x, [](double a, double b) { return std::atan2(a, b); },
      [](double a, double b, double) { return b / (a * a + b * b); },
      [](double a, double b, double) { return -a / (a * a + b * b); });
}

Var wrap_half(Var a) {
  return unary(
      "wrap_half", a, [](double x) { return x - std::floor(x + 0.5); }, [](double, double) { return 1.0; });
}

Var sum(Var a, std::size_t axis) {
  Tape& t = tape_of("sum", a);
  const NDArray& x = t.value(a);
  const AxisView v = axis_view("sum", x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  NDArray out(out_shape);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.n; ++k)
      for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += x[(o * v.n + k) * v.inner + i];
  const std::uint32_t ida = a.id;
  return t.record("sum", std::move(out), {ida}, [ida, v](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t k = 0; k < v.n; ++k)
        for (std::size_t i = 0; i < v.inner; ++i) gx[(o * v.n + k) * v.inner + i] += g[o * v.inner + i];
  });
}

Var mean(Var a, std::size_t axis) {
  const std::size_t n = tape_of("mean", a).value(a).shape().at(axis);
  if (n == 0) shape_fail("mean", "empty axis");
  return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Var sum_all(Var a) {
  Tape& t = tape_of("sum_all", a);
  const NDArray& x = t.value(a);
  double s = 0.0;
  for (double v : x.data()) s += v;
  const std::uint32_t ida = a.id;
  return t.record("sum_all", NDArray::scalar(s), {ida}, [ida](Tape& tp, std::uint32_t self) {
    const double g = tp.grad(self)[0];
    for (double& v : tp.grad(ida).data()) v += g;
  });
}

Var mean_all(Var a) {
  const std::size_t n = tape_of("mean_all", a).value(a).size();
  if (n == 0) shape_fail("mean_all", "empty input");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Var cumsum(Var a, std::size_t axis) {
  Tape& t = tape_of("cumsum", a);
  const NDArray& x = t.value(a);
  const AxisView v = axis_view("cumsum", x.shape(), axis);
  NDArray out(x.shape());
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < v.n; ++k) {
        const std::size_t idx = (o * v.n + k) * v.inner + i;
        acc += x[idx];
        out[idx] = acc;
      }
    }
  const std::uint32_t ida = a.id;
  return t.record("cumsum", std::move(out), {ida}, [ida, v](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        double acc = 0.0;
        for (std::size_t k = v.n; k-- > 0;) {
          const std::size_t idx = (o * v.n + k) * v.inner + i;
          acc += g[idx];
          gx[idx] += acc;
        }
      }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of("reshape", a);
  const NDArray& x = t.value(a);
  if (shape_size(shape) != x.size()) shape_fail("reshape", shapes(x.shape(), shape));
  const std::uint32_t ida = a.id;
  return t.record("reshape", x.reshaped(std::move(shape)), {ida}, [ida](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  Tape& t = tape_of("concat", parts[0]);
  const Shape& first = t.value(parts[0]).shape();
  if (axis >= first.size()) shape_fail("concat", "axis " + std::to_string(axis) + " for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    tape_of("concat", parts[0], p);
    const Shape& s = t.value(p).shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) shape_fail("concat", shapes(first, s) + " on axis " + std::to_string(axis));
    out_shape[axis] += s[axis];
    ids.push_back(p.id);
    widths.push_back(s[axis]);
  }
  const AxisView v = axis_view("concat", out_shape, axis);
  NDArray out(out_shape);
  std::size_t off = 0;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const NDArray& x = t.value(ids[p]);
    const std::size_t chunk = widths[p] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(x.raw() + o * chunk, chunk, out.raw() + o * v.n * v.inner + off * v.inner);
    }
    off += widths[p];
  }
  return t.record("concat", std::move(out), ids, [ids, widths, v](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const std::size_t chunk = widths[p] * v.inner;
      if (tp.requires_grad(ids[p])) {
        NDArray& gx = tp.grad(ids[p]);
        for (std::size_t o = 0; o < v.outer; ++o) {
          const double* src = g.raw() + o * v.n * v.inner + off * v.inner;
          double* dst = gx.raw() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      off += widths[p];
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  Tape& t = tape_of("slice", a);
  const NDArray& x = t.value(a);
  const AxisView v = axis_view("slice", x.shape(), axis);
  if (start + length > v.n) {
    shape_fail("slice", "[" + std::to_string(start) + ", " + std::to_string(start + length) + ") on axis " +
                            std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  NDArray out(out_shape);
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(x.raw() + (o * v.n + start) * v.inner, length * v.inner, out.raw() + o * length * v.inner);
  }
  const std::uint32_t ida = a.id;
  return t.record("slice", std::move(out), {ida}, [ida, v, start, length](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* src = g.raw() + o * length * v.inner;
      double* dst = gx.raw() + (o * v.n + start) * v.inner;
      for (std::size_t i = 0; i < length * v.inner; ++i) dst[i] += src[i];
    }
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of("matmul", a, b);
  const NDArray& x = t.value(a);
  const NDArray& y = t.value(b);
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) shape_fail("matmul", shapes(x.shape(), y.shape()));
  const std::size_t m = x.dim(0);
  const std::size_t k = x.dim(1);
  const std::size_t n = y.dim(1);
  NDArray out({m, n});
  MatMap(out.raw(), m, n).noalias() = ConstMatMap(x.raw(), m, k) * ConstMatMap(y.raw(), k, n);
  const std::uint32_t ida = a.id;
  const std::uint32_t idb = b.id;
  return t.record("matmul", std::move(out), {ida, idb}, [ida, idb, m, k, n](Tape& tp, std::uint32_t self) {
    ConstMatMap g(tp.grad(self).raw(), m, n);
    if (tp.requires_grad(ida)) {
      MatMap(tp.grad(ida).raw(), m, k).noalias() += g * ConstMatMap(tp.value(idb).raw(), k, n).transpose();
    }
    if (tp.requires_grad(idb)) {
      MatMap(tp.grad(idb).raw(), k, n).noalias() += ConstMatMap(tp.value(ida).raw(), m, k).transpose() * g;
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  Tape& t = tape_of("linear", x, weight);
  const NDArray& xv = t.value(x);
  const NDArray& w = t.value(weight);
  if (w.rank() != 2 || xv.rank() < 1 || xv.shape().back() != w.dim(1)) {
    shape_fail("linear", "input " + shape_str(xv.shape()) + " weight " + shape_str(w.shape()));
  }
  const std::size_t in = w.dim(1);
  const std::size_t out_dim = w.dim(0);
  const std::size_t rows = xv.size() / in;
  const bool has_bias = bias.valid();
  if (has_bias) {
    tape_of("linear", x, bias);
    const NDArray& b = t.value(bias);
    if (b.rank() != 1 || b.dim(0) != out_dim) shape_fail("linear", "bias " + shape_str(b.shape()) + " for weight " + shape_str(w.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape.back() = out_dim;
  NDArray out(out_shape);
  MatMap y(out.raw(), rows, out_dim);
  y.noalias() = ConstMatMap(xv.raw(), rows, in) * ConstMatMap(w.raw(), out_dim, in).transpose();
  if (has_bias) y.rowwise() += ConstVecMap(t.value(bias).raw(), out_dim).transpose();
  std::vector<std::uint32_t> parents{x.id, weight.id};
  if (has_bias) parents.push_back(bias.id);
  const std::uint32_t idx = x.id;
  const std::uint32_t idw = weight.id;
  const std::uint32_t idb = has_bias ? bias.id : 0;
  return t.record("linear", std::move(out), parents,
                  [idx, idw, idb, has_bias, rows, in, out_dim](Tape& tp, std::uint32_t self) {
                    ConstMatMap g(tp.grad(self).raw(), rows, out_dim);
                    if (tp.requires_grad(idx)) {
                      MatMap(tp.grad(idx).raw(), rows, in).noalias() +=
                          g * ConstMatMap(tp.value(idw).raw(), out_dim, in);
                    }
                    if (tp.requires_grad(idw)) {
                      MatMap(tp.grad(idw).raw(), out_dim, in).noalias() +=
                          g.transpose() * ConstMatMap(tp.value(idx).raw(), rows, in);
                    }
                    if (has_bias && tp.requires_grad(idb)) {
                      VecMap(tp.grad(idb).raw(), out_dim) += g.colwise().sum().transpose();
                    }
                  });
}

Var node_mix(Var adjacency, Var x) {
  Tape& t = tape_of("node_mix", adjacency, x);
  const NDArray& a = t.value(adjacency);
  const NDArray& xv = t.value(x);
  if (a.rank() != 2 || a.dim(0) != a.dim(1) || xv.rank() != 3 || xv.dim(1) != a.dim(0)) {
    shape_fail("node_mix", "adjacency " + shape_str(a.shape()) + " features " + shape_str(xv.shape()));
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t n = xv.dim(1);
  const std::size_t c = xv.dim(2);
  NDArray out(xv.shape());
  ConstMatMap am(a.raw(), n, n);
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap(out.raw() + b * n * c, n, c).noalias() = am * ConstMatMap(xv.raw() + b * n * c, n, c);
  }
  const std::uint32_t ida = adjacency.id;
  const std::uint32_t idx = x.id;
  return t.record("node_mix", std::move(out), {ida, idx}, [ida, idx, batch, n, c](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    if (tp.requires_grad(ida)) {
      MatMap ga(tp.grad(ida).raw(), n, n);
      const NDArray& xv = tp.value(idx);
      for (std::size_t b = 0; b < batch; ++b) {
        ga.noalias() += ConstMatMap(g.raw() + b * n * c, n, c) * ConstMatMap(xv.raw() + b * n * c, n, c).transpose();
      }
    }
    if (tp.requires_grad(idx)) {
      ConstMatMap am(tp.value(ida).raw(), n, n);
      NDArray& gx = tp.grad(idx);
      for (std::size_t b = 0; b < batch; ++b) {
        MatMap(gx.raw() + b * n * c, n, c).noalias() += am.transpose() * ConstMatMap(g.raw() + b * n * c, n, c);
      }
    }
  });
}

Var conv1d(Var x, Var weight, Var bias) {
  Tape& t = tape_of("conv1d", x, weight);
  tape_of("conv1d", x, bias);
  const NDArray& xv = t.value(x);
  const NDArray& w = t.value(weight);
  const NDArray& bv = t.value(bias);
  if (xv.rank() != 3 || w.rank() != 3 || w.dim(1) != xv.dim(1) || w.dim(2) % 2 == 0 || bv.rank() != 1 ||
      bv.dim(0) != w.dim(0)) {
    shape_fail("conv1d", "input " + shape_str(xv.shape()) + " weight " + shape_str(w.shape()) + " bias " +
                             shape_str(bv.shape()));
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t cin = xv.dim(1);
  const std::size_t len = xv.dim(2);
  const std::size_t cout = w.dim(0);
  const std::size_t k = w.dim(2);
  const std::size_t pad = k / 2;
  const std::size_t ck = cin * k;

  // col[(c*k + u), t] = x[c, t + u - pad], zero outside.
  auto im2col = [=](const double* xb, RowMat& col) {
    col.setZero(static_cast<Eigen::Index>(ck), static_cast<Eigen::Index>(len));
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t tt = 0; tt < len; ++tt) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt + u) - static_cast<std::ptrdiff_t>(pad);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) col(c * k + u, tt) = xb[c * len + src];
        }
  };

  NDArray out({batch, cout, len});
  ConstMatMap wm(w.raw(), cout, ck);
  RowMat col;
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(xv.raw() + b * cin * len, col);
    MatMap y(out.raw() + b * cout * len, cout, len);
    y.noalias() = wm * col;
    y.colwise() += ConstVecMap(bv.raw(), cout);
  }
  const std::uint32_t idx = x.id;
  const std::uint32_t idw = weight.id;
  const std::uint32_t idb = bias.id;
  return t.record("conv1d", std::move(out), {idx, idw, idb},
                  [=](Tape& tp, std::uint32_t self) {
                    const NDArray& g = tp.grad(self);
                    const NDArray& xv = tp.value(idx);
                    ConstMatMap wm(tp.value(idw).raw(), cout, ck);
                    const bool need_x = tp.requires_grad(idx);
                    const bool need_w = tp.requires_grad(idw);
                    RowMat col;
                    RowMat dcol;
                    for (std::size_t b = 0; b < batch; ++b) {
                      ConstMatMap gb(g.raw() + b * cout * len, cout, len);
                      if (need_w) {
                        im2col(xv.raw() + b * cin * len, col);
                        MatMap(tp.grad(idw).raw(), cout, ck).noalias() += gb * col.transpose();
                      }
                      if (need_x) {
                        dcol.noalias() = wm.transpose() * gb;
                        double* gx = tp.grad(idx).raw() + b * cin * len;
                        for (std::size_t c = 0; c < cin; ++c)
                          for (std::size_t u = 0; u < k; ++u)
                            for (std::size_t tt = 0; tt < len; ++tt) {
                              const std::ptrdiff_t src =
                                  static_cast<std::ptrdiff_t>(tt + u) - static_cast<std::ptrdiff_t>(pad);
                              if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) gx[c * len + src] += dcol(c * k + u, tt);
                            }
                      }
                    }
                    if (tp.requires_grad(idb)) {
                      NDArray& gbias = tp.grad(idb);
                      for (std::size_t b = 0; b < batch; ++b)
                        for (std::size_t o = 0; o < cout; ++o)
                          for (std::size_t tt = 0; tt < len; ++tt) gbias[o] += g[(b * cout + o) * len + tt];
                    }
                  });
}

Var channel_linear(Var x, Var weight, Var bias) {
  Tape& t = tape_of("channel_linear", x, weight);
  tape_of("channel_linear", x, bias);
  const NDArray& xv = t.value(x);
  const NDArray& w = t.value(weight);
  const NDArray& bv = t.value(bias);
  if (xv.rank() != 3 || w.rank() != 3 || w.dim(0) != xv.dim(1) || w.dim(2) != xv.dim(2) || bv.rank() != 2 ||
      bv.dim(0) != w.dim(0) || bv.dim(1) != w.dim(1)) {
    shape_fail("channel_linear", "input " + shape_str(xv.shape()) + " weight " + shape_str(w.shape()) + " bias " +
                                     shape_str(bv.shape()));
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t chans = xv.dim(1);
  const std::size_t len = xv.dim(2);
  const std::size_t outs = w.dim(1);
  NDArray out({batch, chans, outs});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < chans; ++c)
      for (std::size_t o = 0; o < outs; ++o) {
        double acc = bv[c * outs + o];
        const double* wr = w.raw() + (c * outs + o) * len;
        const double* xr = xv.raw() + (b * chans + c) * len;
        for (std::size_t tt = 0; tt < len; ++tt) acc += wr[tt] * xr[tt];
        out[(b * chans + c) * outs + o] = acc;
      }
  const std::uint32_t idx = x.id;
  const std::uint32_t idw = weight.id;
  const std::uint32_t idb = bias.id;
  return t.record("channel_linear", std::move(out), {idx, idw, idb}, [=](Tape& tp, std::uint32_t self) {
    const NDArray& g = tp.grad(self);
    const NDArray& xv = tp.value(idx);
    const NDArray& w = tp.value(idw);
    const bool need_x = tp.requires_grad(idx);
    const bool need_w = tp.requires_grad(idw);
    const bool need_b = tp.requires_grad(idb);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < chans; ++c)
        for (std::size_t o = 0; o < outs; ++o) {
          const double gv = g[(b * chans + c) * outs + o];
          if (need_b) tp.grad(idb)[c * outs + o] += gv;
          if (need_w) {
            double* gw = tp.grad(idw).raw() + (c * outs + o) * len;
            const double* xr = xv.raw() + (b * chans + c) * len;
            for (std::size_t tt = 0; tt < len; ++tt) gw[tt] += gv * xr[tt];
          }
          if (need_x) {
            double* gx = tp.grad(idx).raw() + (b * chans + c) * len;
            const double* wr = w.raw() + (c * outs + o) * len;
            for (std::size_t tt = 0; tt < len; ++tt) gx[tt] += gv * wr[tt];
          }
        }
  });
}

Var real_dft(Var h) {
  Tape& t = tape_of("real_dft", h);
  const NDArray& x = t.value(h);
  if (x.rank() < 1 || x.shape().back() < 2) {
    shape_fail("real_dft", "need a last axis of length >= 2, got " + shape_str(x.shape()));
  }
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.size() / len;
  const std::size_t bins = len / 2 + 1;
  Shape out_shape = x.shape();
  out_shape.back() = bins;
  out_shape.push_back(2);
  NDArray out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto coeffs = gaitphase::real_dft(std::span<const double>(x.raw() + r * len, len));
    for (std::size_t j = 0; j < bins; ++j) {
      out[(r * bins + j) * 2] = coeffs[j].real();
      out[(r * bins + j) * 2 + 1] = coeffs[j].imag();
    }
  }
  const std::uint32_t idh = h.id;
  return t.record("real_dft", std::move(out), {idh}, [idh, len, rows, bins](Tape& tp, std::uint32_t self) {
    // Each coefficient is linear in h: dRe_j/dh_t = cos, dIm_j/dh_t = -sin.
    const DftTable& table = dft_table(len);
    const NDArray& g = tp.grad(self);
    NDArray& gh = tp.grad(idh);
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = gh.raw() + r * len;
      for (std::size_t j = 0; j < bins; ++j) {
        const double gre = g[(r * bins + j) * 2];
        const double gim = g[(r * bins + j) * 2 + 1];
        if (gre == 0.0 && gim == 0.0) continue;
        const double* c = &table.cos[j * len];
        const double* s = &table.sin[j * len];
        for (std::size_t tt = 0; tt < len; ++tt) dst[tt] += gre * c[tt] - gim * s[tt];
      }
    }
  });
}

Var softmax(Var a) {
  Tape& t = tape_of("softmax", a);
  const NDArray& x = t.value(a);
  if (x.rank() < 1 || x.shape().back() == 0) shape_fail("softmax", "empty last axis in " + shape_str(x.shape()));
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  NDArray out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.raw() + r * n;
    double* yr = out.raw() + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (yr[i] = std::exp(xr[i] - mx));
    for (std::size_t i = 0; i < n; ++i) yr[i] /= total;
  }
  const std::uint32_t ida = a.id;
  return t.record("softmax", std::move(out), {ida}, [ida, n, rows](Tape& tp, std::uint32_t self) {
    const NDArray& y = tp.value(self);
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += g[r * n + i] * y[r * n + i];
      for (std::size_t i = 0; i < n; ++i) gx[r * n + i] += y[r * n + i] * (g[r * n + i] - dot);
    }
  });
}

Var log_softmax(Var a) {
  Tape& t = tape_of("log_softmax", a);
  const NDArray& x = t.value(a);
  if (x.rank() < 1 || x.shape().back() == 0) shape_fail("log_softmax", "empty last axis in " + shape_str(x.shape()));
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  NDArray out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.raw() + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::exp(xr[i] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] = xr[i] - lse;
  }
  const std::uint32_t ida = a.id;
  return t.record("log_softmax", std::move(out), {ida}, [ida, n, rows](Tape& tp, std::uint32_t self) {
    const NDArray& y = tp.value(self);
    const NDArray& g = tp.grad(self);
    NDArray& gx = tp.grad(ida);
    for (std::size_t r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) gsum += g[r * n + i];
      for (std::size_t i = 0; i < n; ++i) gx[r * n + i] += g[r * n + i] - std::exp(y[r * n + i]) * gsum;
    }
  });
}

}  // namespace gaitphase::ops
