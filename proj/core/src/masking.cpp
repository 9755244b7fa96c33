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

#include "obic/masking.hpp"

#include <algorithm>

#include "obic/error.hpp"

namespace obic {

std::size_t LatentMask::object_count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

LatentMask LatentMask::complement() const {
  LatentMask out = *this;
  for (auto& b : out.bits) b = b ? 0 : 1;
  return out;
}

std::size_t LatentMask::active_count(Layer layer) const {
  const std::size_t obj = object_count();
  return layer == Layer::object ? obj : bits.size() - obj;
}

LatentMask downsample_mask(const PixelMask& mask, std::size_t stride) {
  if (stride == 0 || mask.width % stride || mask.height % stride) {
    throw ShapeError("mask " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                     " not divisible by stride " + std::to_string(stride));
  }
  if (mask.bits.size() != mask.width * mask.height) throw ShapeError("pixel mask size mismatch");
  LatentMask out(mask.height / stride, mask.width / stride);
  const std::size_t block = stride * stride;
  for (std::size_t ly = 0; ly < out.height; ++ly) {
    for (std::size_t lx = 0; lx < out.width; ++lx) {
      std::size_t count = 0;
      for (std::size_t y = 0; y < stride; ++y) {
        for (std::size_t x = 0; x < stride; ++x) count += mask.at(ly * stride + y, lx * stride + x) != 0;
      }
      out.at(ly, lx) = 2 * count >= block ? 1 : 0;
    }
  }
  return out;
}

Tensor layer_mask_tensor(const LatentMask& mask, Layer layer, std::size_t channels,
                         std::size_t batch) {
  Tensor t({batch, channels, mask.height, mask.width});
  const std::size_t plane = mask.height * mask.width;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* dst = t.data() + (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = ((mask.bits[i] != 0) == (layer == Layer::object)) ? 1.0 : 0.0;
      }
    }
  }
  return t;
}

std::pair<Tensor, Tensor> split_latent(const Tensor& f, const LatentMask& mask) {
  if (f.rank() < 3) throw ShapeError("split_latent: expected CHW or NCHW latents");
  const std::size_t h = f.dim(f.rank() - 2), w = f.dim(f.rank() - 1);
  if (h != mask.height || w != mask.width) {
    throw ShapeError("split_latent: mask " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width) + " does not match latent " + shape_string(f.shape()));
  }
  Tensor obj(f.shape()), bkg(f.shape());
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < f.numel(); ++i) {
    if (mask.bits[i % plane]) {
      obj[i] = f[i];
    } else {
      bkg[i] = f[i];
    }
  }
  return {std::move(obj), std::move(bkg)};
}

Tensor merge_latents(const Tensor& obj, const Tensor& bkg) {
  if (obj.shape() != bkg.shape()) {
    throw ShapeError("merge_latents: shape mismatch " + shape_string(obj.shape()) + " vs " +
                     shape_string(bkg.shape()));
  }
  Tensor out = obj;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bkg[i];
  return out;
}

Tensor merge_latents(const std::optional<Tensor>& obj, const std::optional<Tensor>& bkg) {
  if (obj && bkg) return merge_latents(*obj, *bkg);
  if (obj) return *obj;
  if (bkg) return *bkg;
  throw ShapeError("merge_latents: both layers missing");
}

std::pair<Tensor, Tensor> pixel_domain_split(const Tensor& image, const PixelMask& mask) {
  if (image.rank() != 3 || image.dim(1) != mask.height || image.dim(2) != mask.width) {
    throw ShapeError("pixel_domain_split: image " + shape_string(image.shape()) +
                     " does not match mask " + std::to_string(mask.width) + "x" +
                     std::to_string(mask.height));
  }
  Tensor obj(image.shape()), bkg(image.shape());
  const std::size_t plane = mask.height * mask.width;
  for (std::size_t i = 0; i < image.numel(); ++i) {
    if (mask.bits[i % plane]) {
      obj[i] = image[i];
    } else {
      bkg[i] = image[i];
    }
  }
  return {std::move(obj), std::move(bkg)};
}

}  // namespace obic
