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

#include "obic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "obic/error.hpp"
#include "obic/ops.hpp"

namespace obic {
namespace {

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

constexpr double kLeakySlope = 0.01;

}  // namespace

RoundedLatents quantize_round(const Tensor& f) {
  RoundedLatents out{Tensor(f.shape()), 0};
  for (std::size_t i = 0; i < f.numel(); ++i) {
    const double v = f[i];
    if (!(std::abs(v) <= kDivergenceLimit)) {
      throw DivergenceError("latent magnitude " + std::to_string(v) + " exceeds " +
                            std::to_string(kDivergenceLimit));
    }
    double q = std::round(v);
    if (q < kAlphabetMin || q > kAlphabetMax) {
      q = std::clamp<double>(q, kAlphabetMin, kAlphabetMax);
      ++out.clip_count;
    }
    out.values[i] = q;
  }
  return out;
}

Tensor uniform_noise(const Shape& shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Var quantize_noise(Graph& g, Var f, std::mt19937_64& rng) {
  return ops::add_noise(g, f, uniform_noise(g.value(f).shape(), rng));
}

double estimate_rate(std::span<const double> probabilities) {
  double bits = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0) || p > 1.0) throw Error("estimate_rate: probability outside (0, 1]");
    bits -= std::log2(p);
  }
  return bits;
}

double gaussian_bin_probability(double q, double mean, double scale) {
  const double d = std::abs(q - mean);
  const double p = normal_cdf((0.5 - d) / scale) - normal_cdf((-0.5 - d) / scale);
  return std::max(p, kProbabilityFloor);
}

double logistic_bin_probability(double q, double loc, double scale) {
  const double d = std::abs(q - loc);
  const double p = sigmoid((0.5 - d) / scale) - sigmoid((-0.5 - d) / scale);
  return std::max(p, kProbabilityFloor);
}

CdfTable quantize_pmf(std::span<const double> pmf) {
  const std::size_t n = pmf.size();
  if (n == 0 || n > kCdfTotal) throw Error("degenerate table: symbol count out of range");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error("degenerate table: invalid probability");
    total += p;
  }
  if (!(total > 0.0)) throw Error("degenerate table: zero total mass");
  const double budget = static_cast<double>(kCdfTotal - n);
  std::vector<std::uint32_t> freq(n);
  std::uint64_t assigned = 0;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double share = std::floor(pmf[i] / total * budget);
    freq[i] = 1 + static_cast<std::uint32_t>(std::min(share, budget));
    assigned += freq[i];
    if (freq[i] > freq[peak]) peak = i;
  }
  if (assigned > kCdfTotal) throw Error("degenerate table: over-assigned mass");
  freq[peak] += static_cast<std::uint32_t>(kCdfTotal - assigned);
  std::vector<std::uint32_t> cum(n);
  std::uint32_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += freq[i];
    cum[i] = acc;
  }
  return CdfTable(std::move(cum));
}

CdfTable gaussian_table(double mean, double scale) {
  if (!std::isfinite(mean) || !(scale > 0.0) || !std::isfinite(scale)) {
    throw Error("gaussian_table: invalid parameters");
  }
  std::vector<double> pmf(kAlphabetSize, 0.0);
  const double reach = 0.5 + 40.0 * scale;
  for (std::size_t s = 0; s < kAlphabetSize; ++s) {
    const double q = value_of(s);
    if (s == 0) {
      pmf[s] = normal_cdf((q + 0.5 - mean) / scale);
    } else if (s + 1 == kAlphabetSize) {
      pmf[s] = normal_cdf((mean - (q - 0.5)) / scale);
    } else if (std::abs(q - mean) <= reach) {
      const double d = std::abs(q - mean);
      pmf[s] = normal_cdf((0.5 - d) / scale) - normal_cdf((-0.5 - d) / scale);
    }
  }
  return quantize_pmf(pmf);
}

CdfTable logistic_table(double loc, double scale) {
  if (!std::isfinite(loc) || !(scale > 0.0) || !std::isfinite(scale)) {
    throw Error("logistic_table: invalid parameters");
  }
  std::vector<double> pmf(kAlphabetSize, 0.0);
  for (std::size_t s = 0; s < kAlphabetSize; ++s) {
    const double q = value_of(s);
    if (s == 0) {
      pmf[s] = sigmoid((q + 0.5 - loc) / scale);
    } else if (s + 1 == kAlphabetSize) {
      pmf[s] = sigmoid((loc - (q - 0.5)) / scale);
    } else {
      const double d = std::abs(q - loc);
      pmf[s] = sigmoid((0.5 - d) / scale) - sigmoid((-0.5 - d) / scale);
    }
  }
  return quantize_pmf(pmf);
}

FactorizedModel::FactorizedModel(std::string prefix, std::size_t channels)
    : prefix_(std::move(prefix)), channels_(channels) {}

void FactorizedModel::register_parameters(ParameterSet& params) const {
  params.add(loc_name(), Tensor({channels_}, 0.0));
  params.add(log_scale_name(), Tensor({channels_}, 0.0));
}

Var FactorizedModel::likelihood(Graph& g, const ParameterSet& params, Var zhat) const {
  return ops::logistic_likelihood(g, zhat, g.parameter(params, loc_name()),
                                  g.parameter(params, log_scale_name()), kProbabilityFloor);
}

std::vector<CdfTable> FactorizedModel::tables(const ParameterSet& params) const {
  const Tensor& loc = params.at(loc_name()).value;
  const Tensor& ls = params.at(log_scale_name()).value;
  std::vector<CdfTable> out;
  out.reserve(channels_);
  for (std::size_t c = 0; c < channels_; ++c) out.push_back(logistic_table(loc[c], std::exp(ls[c])));
  return out;
}

double FactorizedModel::probability(const ParameterSet& params, std::size_t channel, int q) const {
  return logistic_bin_probability(q, params.at(loc_name()).value[channel],
                                  std::exp(params.at(log_scale_name()).value[channel]));
}

Tensor causal_kernel_mask(std::size_t k) {
  Tensor m({k, k});
  const std::size_t c = k / 2;
  for (std::size_t y = 0; y < k; ++y) {
    for (std::size_t x = 0; x < k; ++x) m[y * k + x] = (y < c || (y == c && x < c)) ? 1.0 : 0.0;
  }
  return m;
}

ConditionalModel::ConditionalModel(std::string prefix, std::size_t latent_channels)
    : prefix_(std::move(prefix)),
      channels_(latent_channels),
      kernel_mask_(causal_kernel_mask(kContextKernel)) {}

void ConditionalModel::register_parameters(ParameterSet& params, std::mt19937_64& rng) const {
  const std::size_t c = channels_, k = kContextKernel;
  const double ctx_fan = static_cast<double>(c * 12);
  params.add(name("context.weight"), uniform_tensor({2 * c, c, k, k}, std::sqrt(3.0 / ctx_fan), rng));
  params.add(name("context.bias"), Tensor({2 * c}, 0.0));
  params.add(name("fusion0.weight"),
             uniform_tensor({2 * c, 4 * c, 1, 1}, std::sqrt(6.0 / (4.0 * c)), rng));
  params.add(name("fusion0.bias"), Tensor({2 * c}, 0.0));
  params.add(name("fusion1.weight"),
             uniform_tensor({2 * c, 2 * c, 1, 1}, 0.5 * std::sqrt(3.0 / (2.0 * c)), rng));
  params.add(name("fusion1.bias"), Tensor({2 * c}, 0.0));
}

ConditionalModel::Params ConditionalModel::parameters(Graph& g, const ParameterSet& params,
                                                      Var hyper_ctx, Var yhat,
                                                      bool autoregressive) const {
  const Tensor& yv = g.value(yhat);
  const Tensor& hv = g.value(hyper_ctx);
  if (yv.rank() != 4 || yv.dim(1) != channels_ || hv.rank() != 4 || hv.dim(1) != 2 * channels_ ||
      hv.dim(2) != yv.dim(2) || hv.dim(3) != yv.dim(3) || hv.dim(0) != yv.dim(0)) {
    throw ShapeError("conditional model: hyper features " + shape_string(hv.shape()) +
                     " not aligned with latents " + shape_string(yv.shape()));
  }
  Var ctx;
  if (autoregressive) {
    ctx = ops::masked_conv2d(g, yhat, g.parameter(params, name("context.weight")),
                             g.parameter(params, name("context.bias")), kernel_mask_,
                             kContextKernel / 2);
  } else {
    ctx = g.constant(Tensor({yv.dim(0), 2 * channels_, yv.dim(2), yv.dim(3)}));
  }
  Var h = ops::concat_channels(g, hyper_ctx, ctx);
  h = ops::leaky_relu(g,
                      ops::conv2d(g, h, g.parameter(params, name("fusion0.weight")),
                                  g.parameter(params, name("fusion0.bias")), {1, 0}),
                      kLeakySlope);
  const Var out = ops::conv2d(g, h, g.parameter(params, name("fusion1.weight")),
                              g.parameter(params, name("fusion1.bias")), {1, 0});
  Params p;
  p.mean = ops::slice_channels(g, out, 0, channels_);
  p.scale = ops::lower_bound(g, ops::exp(g, ops::slice_channels(g, out, channels_, channels_)),
                             kSigmaFloor);
  return p;
}

Var ConditionalModel::likelihood(Graph& g, Var yhat, const Params& p) const {
  return ops::gaussian_likelihood(g, yhat, p.mean, p.scale, kProbabilityFloor);
}

void ConditionalModel::parameters_at(const ParameterSet& params, const Tensor& hyper_ctx,
                                     const Tensor& yhat, std::size_t y, std::size_t x,
                                     bool autoregressive, std::span<double> mean,
                                     std::span<double> scale) const {
  const std::size_t c = channels_, c2 = 2 * c;
  const std::size_t h = yhat.dim(2), w = yhat.dim(3);
  if (mean.size() != c || scale.size() != c) throw ShapeError("parameters_at: output size");
  std::vector<double> in(2 * c2, 0.0);
  for (std::size_t k = 0; k < c2; ++k) in[k] = hyper_ctx.at(0, k, y, x);
  if (autoregressive) {
    const Tensor& wt = params.at(name("context.weight")).value;
    const Tensor& bias = params.at(name("context.bias")).value;
    const std::size_t k = kContextKernel, half = k / 2;
    const std::size_t here = y * w + x;
    for (std::size_t o = 0; o < c2; ++o) in[c2 + o] = bias[o];
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        if (kernel_mask_[ky * k + kx] == 0.0) continue;
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(half);
        const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(half);
        if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) ||
            xx >= static_cast<std::ptrdiff_t>(w)) {
          continue;
        }
        const std::size_t pos = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
        if (pos >= here) {
          throw CausalityError("context tap reads position " + std::to_string(pos) +
                               " while coding position " + std::to_string(here));
        }
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double v = yhat.at(0, ci, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          if (v == 0.0) continue;
          for (std::size_t o = 0; o < c2; ++o) in[c2 + o] += wt[((o * c + ci) * k + ky) * k + kx] * v;
        }
      }
    }
  }
  const Tensor& w0 = params.at(name("fusion0.weight")).value;
  const Tensor& b0 = params.at(name("fusion0.bias")).value;
  const Tensor& w1 = params.at(name("fusion1.weight")).value;
  const Tensor& b1 = params.at(name("fusion1.bias")).value;
  std::vector<double> hidden(c2);
  for (std::size_t o = 0; o < c2; ++o) {
    double s = b0[o];
    for (std::size_t i = 0; i < 2 * c2; ++i) s += w0[o * 2 * c2 + i] * in[i];
    hidden[o] = s > 0 ? s : kLeakySlope * s;
  }
  for (std::size_t o = 0; o < c2; ++o) {
    double s = b1[o];
    for (std::size_t i = 0; i < c2; ++i) s += w1[o * c2 + i] * hidden[i];
    if (o < c) {
      mean[o] = s;
    } else {
      scale[o - c] = std::max(std::exp(s), kSigmaFloor);
    }
  }
}

}  // namespace obic
