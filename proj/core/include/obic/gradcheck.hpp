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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "obic/tensor.hpp"

namespace obic {

enum class GradOp {
  conv2d,
  conv2d_stride2,
  conv_transpose2d,
  masked_conv2d,
  add,
  sub,
  multiply,
  scale,
  leaky_relu,
  exp,
  logistic_cdf,
  clamp,
  lower_bound,
  neg_log2,
  additive_noise,
  avg_pool2,
  sum,
  slice_channels,
  concat_channels,
  gaussian_likelihood,
  logistic_likelihood,
  msssim,
};

std::span<const GradOp> all_grad_ops();
std::string_view grad_op_name(GradOp op);
std::optional<GradOp> parse_grad_op(std::string_view name);

// Largest relative discrepancy between the analytic gradient and a central
// finite difference with step `eps`, over every input element of one random
// instance of `op`. The scalar probed is Σ r·out for a random projection r.
// Relative error is |a - n| / max(|a|, |n|, 1e-3).
//
// input_shape is C×H×W (a unit batch is prepended) or N×C×H×W.
double grad_check(GradOp op, const Shape& input_shape, double eps, std::uint64_t seed = 0);

// Throws obic::Error for an unknown op name.
double grad_check(std::string_view op, const Shape& input_shape, double eps,
                  std::uint64_t seed = 0);

}  // namespace obic
