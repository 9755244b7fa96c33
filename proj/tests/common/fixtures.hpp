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

#include <algorithm>
#include <cmath>
#include <utility>

#include "obic/tensor.hpp"

namespace obic::testing {

// Deterministic image pair; tests/oracles/msssim_oracle.py evaluates the same
// formula with an independent MS-SSIM implementation.
inline std::pair<Tensor, Tensor> fixture_pair(std::size_t size) {
  Tensor a({3, size, size}), b({3, size, size});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double cx = static_cast<double>(x), cy = static_cast<double>(y), cc = static_cast<double>(c);
        const double va = 0.5 + 0.3 * std::sin(0.37 * cx + 0.23 * cy + cc) +
                          0.15 * std::cos(0.05 * cx * cy / 3.0 + 0.5 * cc);
        const double vb = va + 0.12 * std::sin(1.3 * cx - 0.7 * cy + 2.0 * cc) +
                          0.05 * std::cos(0.9 * cy + 0.4 * cx * cc);
        a[(c * size + y) * size + x] = std::clamp(va, 0.0, 1.0);
        b[(c * size + y) * size + x] = std::clamp(vb, 0.0, 1.0);
      }
    }
  }
  return {a, b};
}

// Oracle values printed by tests/oracles/msssim_oracle.py.
constexpr double kOracleMsssim64 = 0.9500415921;
constexpr double kOracleMsssim192 = 0.9723913670;

}  // namespace obic::testing
