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

#include "obic/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "obic/error.hpp"
#include "obic/graph.hpp"
#include "obic/ops.hpp"

namespace obic {
namespace {

struct OpEntry {
  GradOp op;
  std::string_view name;
};

constexpr std::array<OpEntry, 22> kOps = {{
    {GradOp::conv2d, "conv2d"},
    {GradOp::conv2d_stride2, "conv2d_stride2"},
    {GradOp::conv_transpose2d, "conv_transpose2d"},
    {GradOp::masked_conv2d, "masked_conv2d"},
    {GradOp::add, "add"},
    {GradOp::sub, "sub"},
    {GradOp::multiply, "multiply"},
    {GradOp::scale, "scale"},
    {GradOp::leaky_relu, "leaky_relu"},
    {GradOp::exp, "exp"},
    {GradOp::logistic_cdf, "logistic_cdf"},
    {GradOp::clamp, "clamp"},
    {GradOp::lower_bound, "lower_bound"},
    {GradOp::neg_log2, "neg_log2"},
    {GradOp::additive_noise, "additive_noise"},
    {GradOp::avg_pool2, "avg_pool2"},
    {GradOp::sum, "sum"},
    {GradOp::slice_channels, "slice_channels"},
    {GradOp::concat_channels, "concat_channels"},
    {GradOp::gaussian_likelihood, "gaussian_likelihood"},
    {GradOp::logistic_likelihood, "logistic_likelihood"},
    {GradOp::msssim, "msssim"},
}};

constexpr std::array<GradOp, kOps.size()> kOpList = [] {
  std::array<GradOp, kOps.size()> out{};
  for (std::size_t i = 0; i < kOps.size(); ++i) out[i] = kOps[i].op;
  return out;
}();

using Builder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct Case {
  std::vector<Tensor> inputs;
  Builder build;
};

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Keeps samples at least `margin` away from `kink`.
void avoid(Tensor& t, double kink, double margin) {
  for (double& v : t.values()) {
    if (std::abs(v - kink) < margin) v = kink + (v >= kink ? margin : -margin);
  }
}

Tensor causal_mask(std::size_t k) {
  Tensor m({k, k});
  const std::size_t c = k / 2;
  for (std::size_t y = 0; y < k; ++y) {
    for (std::size_t x = 0; x < k; ++x) m[y * k + x] = (y < c || (y == c && x < c)) ? 1.0 : 0.0;
  }
  return m;
}

Case make_case(GradOp op, const Shape& in_shape, std::mt19937_64& rng) {
  const Shape s = in_shape.size() == 3 ? Shape{1, in_shape[0], in_shape[1], in_shape[2]} : in_shape;
  if (s.size() != 4) throw ShapeError("grad_check: input shape must be CHW or NCHW");
  const std::size_t c = s[1];
  const double margin = 1e-2;
  Case k;
  auto x = [&](double lo = -2.0, double hi = 2.0) { return random_tensor(s, rng, lo, hi); };
  switch (op) {
    case GradOp::conv2d:
      k.inputs = {x(), random_tensor({4, c, 3, 3}, rng, -1, 1), random_tensor({4}, rng, -1, 1)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::conv2d(g, v[0], v[1], v[2], {1, 1});
      };
      break;
    case GradOp::conv2d_stride2:
      k.inputs = {x(), random_tensor({4, c, 5, 5}, rng, -1, 1), random_tensor({4}, rng, -1, 1)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::conv2d(g, v[0], v[1], v[2], {2, 2});
      };
      break;
    case GradOp::conv_transpose2d:
      k.inputs = {x(), random_tensor({c, 4, 5, 5}, rng, -1, 1), random_tensor({4}, rng, -1, 1)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::conv_transpose2d(g, v[0], v[1], v[2], {2, 2, 1});
      };
      break;
    case GradOp::masked_conv2d:
      k.inputs = {x(), random_tensor({4, c, 5, 5}, rng, -1, 1), random_tensor({4}, rng, -1, 1)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::masked_conv2d(g, v[0], v[1], v[2], causal_mask(5), 2);
      };
      break;
    case GradOp::add:
      k.inputs = {x(), x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::add(g, v[0], v[1]); };
      break;
    case GradOp::sub:
      k.inputs = {x(), x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::sub(g, v[0], v[1]); };
      break;
    case GradOp::multiply:
      k.inputs = {x(), x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::mul(g, v[0], v[1]); };
      break;
    case GradOp::scale:
      k.inputs = {x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::scale(g, v[0], -1.7); };
      break;
    case GradOp::leaky_relu:
      k.inputs = {x()};
      avoid(k.inputs[0], 0.0, margin);
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::leaky_relu(g, v[0], 0.01); };
      break;
    case GradOp::exp:
      k.inputs = {x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::exp(g, v[0]); };
      break;
    case GradOp::logistic_cdf:
      k.inputs = {x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::logistic_cdf(g, v[0]); };
      break;
    case GradOp::clamp:
      k.inputs = {x()};
      avoid(k.inputs[0], -1.0, margin);
      avoid(k.inputs[0], 1.0, margin);
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::clamp(g, v[0], -1.0, 1.0); };
      break;
    case GradOp::lower_bound:
      k.inputs = {x()};
      avoid(k.inputs[0], 0.1, margin);
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::lower_bound(g, v[0], 0.1); };
      break;
    case GradOp::neg_log2:
      k.inputs = {x(0.05, 1.0)};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::neg_log2(g, v[0]); };
      break;
    case GradOp::additive_noise: {
      k.inputs = {x()};
      Tensor noise = random_tensor(s, rng, -0.5, 0.5);
      k.build = [noise](Graph& g, const std::vector<Var>& v) {
        return ops::add_noise(g, v[0], noise);
      };
      break;
    }
    case GradOp::avg_pool2:
      k.inputs = {x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::avg_pool2(g, v[0]); };
      break;
    case GradOp::sum:
      k.inputs = {x()};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::sum(g, v[0]); };
      break;
    case GradOp::slice_channels: {
      k.inputs = {x()};
      const std::size_t begin = c / 2, count = c - c / 2;
      k.build = [begin, count](Graph& g, const std::vector<Var>& v) {
        return ops::slice_channels(g, v[0], begin, count);
      };
      break;
    }
    case GradOp::concat_channels:
      k.inputs = {x(), random_tensor({s[0], c + 1, s[2], s[3]}, rng, -2, 2)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::concat_channels(g, v[0], v[1]);
      };
      break;
    case GradOp::gaussian_likelihood:
      k.inputs = {x(), x(), x(0.3, 2.0)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::gaussian_likelihood(g, v[0], v[1], v[2], 1e-12);
      };
      break;
    case GradOp::logistic_likelihood:
      k.inputs = {x(), random_tensor({c}, rng, -1, 1), random_tensor({c}, rng, -1, 1)};
      k.build = [](Graph& g, const std::vector<Var>& v) {
        return ops::logistic_likelihood(g, v[0], v[1], v[2], 1e-12);
      };
      break;
    case GradOp::msssim: {
      Tensor a = x();
      Tensor b = a;
      std::uniform_real_distribution<double> u(-0.3, 0.3);
      for (double& v : b.values()) v += u(rng);
      k.inputs = {std::move(a), std::move(b)};
      k.build = [](Graph& g, const std::vector<Var>& v) { return ops::msssim(g, v[0], v[1]); };
      break;
    }
  }
  return k;
}

double probe(const Case& k, const std::vector<Tensor>& inputs, const Tensor& r) {
  Graph g;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(g.constant(t));
  const Tensor& out = g.value(k.build(g, vars));
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += r[i] * out[i];
  return s;
}

}  // namespace

std::span<const GradOp> all_grad_ops() { return kOpList; }

std::string_view grad_op_name(GradOp op) {
  for (const auto& e : kOps) {
    if (e.op == op) return e.name;
  }
  return "unknown";
}

std::optional<GradOp> parse_grad_op(std::string_view name) {
  for (const auto& e : kOps) {
    if (e.name == name) return e.op;
  }
  return std::nullopt;
}

double grad_check(GradOp op, const Shape& input_shape, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(op) + 1);
  const Case k = make_case(op, input_shape, rng);

  // Analytic pass: inputs are leaf parameters so gradients reach them.
  std::vector<Parameter> params(k.inputs.size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = k.inputs[i];
  Graph g;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars.push_back(g.parameter("in" + std::to_string(i), params[i]));
  }
  const Var out = k.build(g, vars);
  const Tensor r = random_tensor(g.value(out).shape(), rng, -1.0, 1.0);
  g.backward(out, r);

  double worst = 0.0;
  std::vector<Tensor> probe_inputs = k.inputs;
  for (std::size_t i = 0; i < probe_inputs.size(); ++i) {
    const Tensor& analytic = g.grad(vars[i]);
    for (std::size_t e = 0; e < probe_inputs[i].numel(); ++e) {
      const double orig = probe_inputs[i][e];
      probe_inputs[i][e] = orig + eps;
      const double up = probe(k, probe_inputs, r);
      probe_inputs[i][e] = orig - eps;
      const double down = probe(k, probe_inputs, r);
      probe_inputs[i][e] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[e];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

double grad_check(std::string_view op, const Shape& input_shape, double eps, std::uint64_t seed) {
  const auto parsed = parse_grad_op(op);
  if (!parsed) throw Error("grad_check: unsupported op kind '" + std::string(op) + "'");
  return grad_check(*parsed, input_shape, eps, seed);
}

}  // namespace obic
