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

#include "gaitphase/tape.hpp"

#include <algorithm>
#include <cmath>

#include "gaitphase/error.hpp"

namespace gaitphase {

Parameter& ParamStore::add(std::string name, NDArray init) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = NDArray(init.shape());
  p->value = std::move(init);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

Parameter& ParamStore::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return *params_[it->second];
}

const Parameter& ParamStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

const NDArray& Var::value() const { return tape->value(id); }
const Shape& Var::shape() const { return tape->value(id).shape(); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(NDArray value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.op = "param";
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::frozen(const Parameter& p) {
  Node n;
  n.op = "frozen";
  n.frozen = &p;
  return push(std::move(n));
}

Var Tape::record(const char* op, NDArray value, std::vector<std::uint32_t> parents, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError(std::string(op) + ": non-finite value in output of shape " + shape_str(value.shape()));
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(), [&](std::uint32_t p) {
    return nodes_[p].requires_grad;
  });
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const NDArray& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.param) return n.param->value;
  if (n.frozen) return n.frozen->value;
  return n.value;
}

NDArray& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != value(id).shape() || n.grad.size() != value(id).size()) {
    n.grad = NDArray(value(id).shape());
  }
  return n.grad;
}

const NDArray& Tape::grad(Var v) const { return nodes_[v.id].grad; }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw UsageError("backward: variable belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_str(value(loss.id).shape()));
  }
  for (auto& n : nodes_) n.grad = NDArray();
  grad(loss.id).fill(1.0);
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      if (n.param->grad.shape() != n.param->value.shape() || n.param->grad.size() != n.param->value.size())
        n.param->grad = NDArray(n.param->value.shape());
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

ParamBinder::ParamBinder(Tape& tape, ParamStore& store) : tape_(tape), store_(store), mutable_store_(&store) {}
ParamBinder::ParamBinder(Tape& tape, const ParamStore& store) : tape_(tape), store_(store) {}

Var ParamBinder::operator()(std::string_view name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  Var v = mutable_store_ ? tape_.param(mutable_store_->get(name)) : tape_.frozen(store_.get(name));
  bound_.emplace(std::string(name), v);
  return v;
}

}  // namespace gaitphase
