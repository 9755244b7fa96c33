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
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "obic/tensor.hpp"

namespace obic {

enum class Layer { object, background };

constexpr const char* layer_name(Layer l) { return l == Layer::object ? "obj" : "bkg"; }

enum class MaskingDomain : std::uint8_t { feature = 0, pixel = 1 };

// Binary segmentation at pixel resolution; 1 marks the object.
struct PixelMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  PixelMask() = default;
  PixelMask(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), bits(w * h, fill) {}
  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  friend bool operator==(const PixelMask&, const PixelMask&) = default;
};

// Binary mask at latent resolution; the object layer keeps cells equal to 1.
struct LatentMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  LatentMask() = default;
  LatentMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), bits(h * w, fill) {}
  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  std::size_t object_count() const;
  LatentMask complement() const;
  // Whether the cell belongs to `layer`.
  bool active(Layer layer, std::size_t y, std::size_t x) const {
    return (at(y, x) != 0) == (layer == Layer::object);
  }
  std::size_t active_count(Layer layer) const;
  friend bool operator==(const LatentMask&, const LatentMask&) = default;
};

// Each latent cell covers a stride×stride block and is object when at least
// half of its pixels are object (ties go to the object).
LatentMask downsample_mask(const PixelMask& mask, std::size_t stride = 16);

// Mask values broadcast over `channels` as a 1×C×h×w tensor; `layer` picks M
// or 1−M.
Tensor layer_mask_tensor(const LatentMask& mask, Layer layer, std::size_t channels,
                         std::size_t batch = 1);

// F_obj = M⊗F, F_bkg = (1−M)⊗F with the same mask applied to every channel.
// F is C×h×w or N×C×h×w.
std::pair<Tensor, Tensor> split_latent(const Tensor& f, const LatentMask& mask);

// Elementwise sum; a missing layer contributes zeros.
Tensor merge_latents(const std::optional<Tensor>& obj, const std::optional<Tensor>& bkg);
Tensor merge_latents(const Tensor& obj, const Tensor& bkg);

// Pixel-domain split of a 3×H×W image.
std::pair<Tensor, Tensor> pixel_domain_split(const Tensor& image, const PixelMask& mask);

}  // namespace obic
