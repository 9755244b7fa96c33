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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "obic/graph.hpp"
#include "obic/range_coder.hpp"
#include "obic/tensor.hpp"

namespace obic {

// Quantized latents live in [-128, 127]; symbol index = value + 128.
constexpr int kAlphabetMin = -128;
constexpr int kAlphabetMax = 127;
constexpr std::size_t kAlphabetSize = kAlphabetMax - kAlphabetMin + 1;
// Pre-clip magnitude that signals a diverged model.
constexpr double kDivergenceLimit = 200.0;
constexpr double kProbabilityFloor = 1.0 / 65536.0;
constexpr double kSigmaFloor = 1e-6;

inline std::size_t symbol_of(int q) { return static_cast<std::size_t>(q - kAlphabetMin); }
inline int value_of(std::size_t symbol) { return static_cast<int>(symbol) + kAlphabetMin; }

struct RoundedLatents {
  Tensor values;
  std::size_t clip_count = 0;
};

// Round half away from zero and clip to the alphabet. Throws DivergenceError
// when any |value| exceeds kDivergenceLimit.
RoundedLatents quantize_round(const Tensor& f);

// i.i.d. U[-0.5, 0.5) samples.
Tensor uniform_noise(const Shape& shape, std::mt19937_64& rng);

// Training proxy for rounding: f + U[-0.5, 0.5) with identity gradient.
Var quantize_noise(Graph& g, Var f, std::mt19937_64& rng);

// −Σ log2 p. Throws on p <= 0 or p > 1.
double estimate_rate(std::span<const double> probabilities);

// Unit-bin probabilities, floored at kProbabilityFloor. These match the
// graph ops used for training.
double gaussian_bin_probability(double q, double mean, double scale);
double logistic_bin_probability(double q, double loc, double scale);

// Converts a probability vector into a 16-bit cumulative table: each symbol
// receives one count plus its share of the remaining mass, and rounding
// leftovers go to the most probable symbol.
CdfTable quantize_pmf(std::span<const double> pmf);

// Tables over the full alphabet; the edge symbols absorb the tails.
CdfTable gaussian_table(double mean, double scale);
CdfTable logistic_table(double loc, double scale);

// Per-channel logistic model for hyper latents.
class FactorizedModel {
 public:
  FactorizedModel() = default;
  FactorizedModel(std::string prefix, std::size_t channels);

  void register_parameters(ParameterSet& params) const;
  // zhat: N×C×h×w; returns per-element bin probabilities.
  Var likelihood(Graph& g, const ParameterSet& params, Var zhat) const;
  std::vector<CdfTable> tables(const ParameterSet& params) const;
  double probability(const ParameterSet& params, std::size_t channel, int q) const;

  std::size_t channels() const noexcept { return channels_; }
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  std::string loc_name() const { return prefix_ + ".loc"; }
  std::string log_scale_name() const { return prefix_ + ".log_scale"; }

  std::string prefix_;
  std::size_t channels_ = 0;
};

// Gaussian conditional model for latents. Mean and scale per element come
// from fusing hyper-decoder features with a causal 5×5 masked convolution
// over already-coded latents (raster order, all channels of a position
// together).
class ConditionalModel {
 public:
  static constexpr std::size_t kContextKernel = 5;

  ConditionalModel() = default;
  ConditionalModel(std::string prefix, std::size_t latent_channels);

  void register_parameters(ParameterSet& params, std::mt19937_64& rng) const;

  struct Params {
    Var mean;
    Var scale;
  };

  // hyper_ctx: N×2C×h×w, yhat: N×C×h×w. With autoregressive == false the
  // context branch contributes zeros.
  Params parameters(Graph& g, const ParameterSet& params, Var hyper_ctx, Var yhat,
                    bool autoregressive) const;
  Var likelihood(Graph& g, Var yhat, const Params& p) const;

  // Mean and scale for every channel at (y, x), computed directly from
  // 1×2C×h×w hyper features and 1×C×h×w latents. This is the path the entropy
  // coder uses on both sides. Throws CausalityError when the kernel mask
  // reaches a position at or after (y, x) in raster order.
  void parameters_at(const ParameterSet& params, const Tensor& hyper_ctx, const Tensor& yhat,
                     std::size_t y, std::size_t x, bool autoregressive, std::span<double> mean,
                     std::span<double> scale) const;

  const Tensor& kernel_mask() const noexcept { return kernel_mask_; }
  // For tests of the causality check.
  void set_kernel_mask(Tensor mask) { kernel_mask_ = std::move(mask); }

  std::size_t channels() const noexcept { return channels_; }
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  std::string name(const char* part) const { return prefix_ + "." + part; }

  std::string prefix_;
  std::size_t channels_ = 0;
  Tensor kernel_mask_;
};

// Type-A causal mask: taps strictly before the centre in raster order.
Tensor causal_kernel_mask(std::size_t k);

}  // namespace obic
