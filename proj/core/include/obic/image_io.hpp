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

#include <filesystem>
#include <vector>

#include "obic/masking.hpp"
#include "obic/tensor.hpp"

namespace obic {

// Images are 3×H×W tensors with values in [0, 1]. PNG (8/16-bit gray, gray+alpha,
// RGB, RGBA, palette) and binary PPM/PGM are accepted on input; the output
// format follows the file extension (.png, .ppm).
Tensor load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Tensor& image);

// Any nonzero sample in the first channel marks an object pixel.
PixelMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const PixelMask& mask);

// 8-bit rounding used when writing images.
std::uint8_t to_byte(double v);

}  // namespace obic
