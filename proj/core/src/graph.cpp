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

#include "obic/graph.hpp"

#include "obic/error.hpp"

namespace obic {

Parameter& ParameterSet::add(const std::string& name, Tensor init) {
  if (params_.count(name)) throw Error("duplicate parameter name: " + name);
  Parameter p;
  p.grad = Tensor(init.shape());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.numel();
  return n;
}

std::vector<std::string> ParameterSet::names(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    p.grad.fill(0.0);
  }
}

Var Graph::constant(Tensor value) {
  Node n;
  n.kind = "constant";
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  ran_backward_ = false;
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(const std::string& name, const Parameter& p) {
  Node n;
  n.kind = "parameter";
  n.ref = &p.value;
  n.param_name = name;
  n.needs_grad = p.requires_grad;
  nodes_.push_back(std::move(n));
  ran_backward_ = false;
  return Var{nodes_.size() - 1};
}

Var Graph::record(std::string_view kind, std::vector<Var> inputs, Tensor value,
                  BackwardFn backward) {
  Node n;
  n.kind = kind;
  for (Var in : inputs) {
    if (!in.valid() || in.id >= nodes_.size()) throw GraphError("op input does not precede op");
    n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
  }
  n.inputs = std::move(inputs);
  n.owned = std::move(value);
  n.backward = std::move(backward);
  if (check_finite_ && !n.owned.all_finite()) {
    throw NonFiniteError(nodes_.size(), std::string(kind));
  }
  nodes_.push_back(std::move(n));
  ran_backward_ = false;
  return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw GraphError("invalid variable");
  return nodes_[v.id];
}

Graph::Node& Graph::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw GraphError("invalid variable");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const {
  const Node& n = node(v);
  return n.ref ? *n.ref : n.owned;
}

const Tensor& Graph::grad(Var v) const {
  static const Tensor kEmpty;
  const Node& n = node(v);
  return n.has_grad ? n.grad : kEmpty;
}

Tensor& Graph::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(value(v).shape());
    n.has_grad = true;
  }
  return n.grad;
}

bool Graph::needs_grad(Var v) const { return node(v).needs_grad; }

std::string_view Graph::kind(Var v) const { return node(v).kind; }

void Graph::backward(Var output) {
  const Tensor& out = value(output);
  if (out.numel() != 1) {
    throw GraphError("backward without seed requires a scalar output, got " +
                     shape_string(out.shape()));
  }
  backward(output, Tensor(out.shape(), 1.0));
}

void Graph::backward(Var output, const Tensor& seed) {
  if (nodes_.empty() || !output.valid() || output.id >= nodes_.size()) {
    throw GraphError("backward called before forward");
  }
  if (seed.shape() != value(output).shape()) throw ShapeError("seed shape mismatch");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_buffer(output) = seed;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.needs_grad || !n.backward) continue;
    n.backward(*this, Var{i});
  }
  ran_backward_ = true;
}

void Graph::accumulate_grads(ParameterSet& params) const {
  if (!ran_backward_) throw GraphError("accumulate_grads before backward");
  for (const Node& n : nodes_) {
    if (n.param_name.empty() || !n.has_grad) continue;
    Parameter& p = params.at(n.param_name);
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    auto dst = p.grad.values();
    auto src = n.grad.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

}  // namespace obic
