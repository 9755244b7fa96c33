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

#include <span>
#include <vector>

#include "obic/tensor.hpp"

namespace obic {

// Multi-scale SSIM over N×C×H×W batches (values nominally in [0,1]).
//
// Gaussian window 11×11, sigma 1.5, valid filtering, C1 = 0.01², C2 = 0.03².
// Five scales with the standard weights when min(H, W) >= 176, otherwise the
// first three scales with the first three weights renormalized. A scale
// narrower than the window uses the largest odd window that fits. Downsampling
// is a 2×2 average that drops a trailing odd row/column. Contrast-structure
// terms (and the final-scale SSIM) are clipped at zero, raised to the scale
// weights, multiplied per channel and averaged across channels.
constexpr std::size_t kMsssimMinDim = 32;
constexpr std::size_t kMsssimFullScaleDim = 176;

std::vector<double> msssim_batch(const Tensor& x, const Tensor& y);

// Accumulates d(Σ_n upstream[n]·msssim_n) into dx / dy (either may be null).
void msssim_batch_backward(const Tensor& x, const Tensor& y, std::span<const double> upstream,
                           Tensor* dx, Tensor* dy);

// Single image pair (CHW or 1×C×H×W).
double msssim(const Tensor& a, const Tensor& b);

}  // namespace obic
