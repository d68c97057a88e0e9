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
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gaitphase/ndarray.hpp"

namespace gaitphase {

/// A named trainable array and its gradient buffer.
struct Parameter {
  std::string name;
  NDArray value;
  NDArray grad;
};

/// Named parameters in insertion order. References stay valid for the
/// lifetime of the store.
class ParamStore {
 public:
  Parameter& add(std::string name, NDArray init);

  bool contains(std::string_view name) const;
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  bool valid() const { return tape != nullptr; }
  const NDArray& value() const;
  const Shape& shape() const;
};

/// Reverse-mode recording of one forward pass. Nodes are appended in
/// creation order, which is a topological order, so backward walks the
/// node list once from the loss down.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(NDArray value);
  /// Leaf bound to a trainable parameter; backward accumulates into it.
  Var param(Parameter& p);
  /// Leaf that reads a parameter without tracking a gradient.
  Var frozen(const Parameter& p);

  /// Record an op result. `op` names the operation in error messages;
  /// non-finite values are rejected here.
  Var record(const char* op, NDArray value, std::vector<std::uint32_t> parents, BackwardFn backward);

  const NDArray& value(std::uint32_t id) const;
  const NDArray& value(Var v) const { return value(v.id); }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }
  const std::vector<std::uint32_t>& parents(std::uint32_t id) const { return nodes_[id].parents; }

  /// Gradient of `id` during backward (zero-initialized on first access).
  NDArray& grad(std::uint32_t id);
  /// Gradient of `v` after backward; zero-shaped if never reached.
  const NDArray& grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  /// Parameter gradients accumulate across calls until zeroed.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op = "";
    NDArray value;
    NDArray grad;
    Parameter* param = nullptr;
    const Parameter* frozen = nullptr;
    std::vector<std::uint32_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  // A deque keeps value/shape references valid while more nodes are recorded.
  std::deque<Node> nodes_;
};

/// Resolves parameter names to tape leaves: trainable when constructed
/// from a mutable store, frozen otherwise. Each name maps to one leaf.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, ParamStore& store);
  ParamBinder(Tape& tape, const ParamStore& store);

  Var operator()(std::string_view name);
  Tape& tape() { return tape_; }
  const ParamStore& store() const { return store_; }
  bool trainable() const { return mutable_store_ != nullptr; }

 private:
  Tape& tape_;
  const ParamStore& store_;
  ParamStore* mutable_store_ = nullptr;
  std::map<std::string, Var, std::less<>> bound_;
};

}  // namespace gaitphase
