// Copyright 2026 The OBIC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "obic/tensor.hpp"

namespace obic {

// Handle to a node in a Graph.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const noexcept { return id != kInvalid; }
};

struct Parameter {
  Tensor value;
  Tensor grad;
  bool requires_grad = true;
};

// Named parameter table. Iteration order is the lexicographic name order,
// which is also the checkpoint order.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names(std::string_view prefix = {}) const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter, std::less<>> params_;
};

// Define-by-run reverse-mode tape. Nodes are appended in execution order, so
// the node list is already topologically sorted; backward walks it in
// reverse and visits each node once.
//
// A Graph is single-owner. Parameters are referenced, not copied, and must
// outlive the graph.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var constant(Tensor value);
  Var parameter(const std::string& name, const Parameter& p);
  Var parameter(const ParameterSet& params, const std::string& name) {
    return parameter(name, params.at(name));
  }

  // Appends an op node. `backward` receives the output Var and must push
  // gradients into inputs via grad_buffer(); it is skipped when no input
  // needs a gradient.
  Var record(std::string_view kind, std::vector<Var> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() target w.r.t. v; empty when v was not reached.
  const Tensor& grad(Var v) const;
  // Zero-initialized on first access during backward.
  Tensor& grad_buffer(Var v);
  bool needs_grad(Var v) const;
  std::string_view kind(Var v) const;

  void backward(Var output);
  void backward(Var output, const Tensor& seed);

  // Adds the parameter-leaf gradients of the last backward() into `params`
  // (matched by name).
  void accumulate_grads(ParameterSet& params) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  void set_check_finite(bool on) noexcept { check_finite_ = on; }

 private:
  struct Node {
    std::string_view kind;
    std::vector<Var> inputs;
    Tensor owned;
    const Tensor* ref = nullptr;
    std::string param_name;
    bool needs_grad = false;
    Tensor grad;
    bool has_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
  bool check_finite_ = true;
  bool ran_backward_ = false;
};

}  // namespace obic
