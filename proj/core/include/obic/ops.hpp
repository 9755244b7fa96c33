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

#include "obic/graph.hpp"
#include "obic/tensor.hpp"

// Differentiable ops recorded on a Graph. Spatial ops take NCHW inputs.
// Elementwise binary ops require identical shapes (no broadcasting).
namespace obic::ops {

struct ConvSpec {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct ConvTransposeSpec {
  std::size_t stride = 2;
  std::size_t padding = 0;
  std::size_t output_padding = 0;
};

// x: N×Ci×H×W, weight: Co×Ci×k×k, bias: Co.
Var conv2d(Graph& g, Var x, Var weight, Var bias, ConvSpec spec);

// x: N×Ci×H×W, weight: Ci×Co×k×k, bias: Co. Output extent is
// (H-1)·stride - 2·padding + k + output_padding.
Var conv_transpose2d(Graph& g, Var x, Var weight, Var bias, ConvTransposeSpec spec);

// Stride-1 convolution whose k×k taps are multiplied by a fixed 0/1 mask.
Var masked_conv2d(Graph& g, Var x, Var weight, Var bias, const Tensor& kernel_mask,
                  std::size_t padding);

Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double s);
Var add_scalar(Graph& g, Var a, double s);
// a ⊙ c for a constant c (no gradient to c).
Var mul_constant(Graph& g, Var a, const Tensor& c);

Var leaky_relu(Graph& g, Var x, double slope = 0.01);
Var exp(Graph& g, Var x);
Var logistic_cdf(Graph& g, Var x);
Var clamp(Graph& g, Var x, double lo, double hi);
Var lower_bound(Graph& g, Var x, double floor);
// -log2(p), elementwise.
Var neg_log2(Graph& g, Var p);
// x + noise with identity gradient; noise is supplied by the caller.
Var add_noise(Graph& g, Var x, const Tensor& noise);

Var avg_pool2(Graph& g, Var x);
Var sum(Graph& g, Var x);

Var slice_channels(Graph& g, Var x, std::size_t begin, std::size_t count);
Var concat_channels(Graph& g, Var a, Var b);

// Probability mass of the unit bin centred on y under N(mu, sigma²),
// floored at `floor`.
Var gaussian_likelihood(Graph& g, Var y, Var mu, Var sigma, double floor);

// Probability mass of the unit bin centred on z under a per-channel logistic
// with location loc[c] and scale exp(log_scale[c]), floored at `floor`.
Var logistic_likelihood(Graph& g, Var z, Var loc, Var log_scale, double floor);

// Per-image MS-SSIM of two N×C×H×W batches; output shape {N}.
Var msssim(Graph& g, Var x, Var y);

}  // namespace obic::ops
