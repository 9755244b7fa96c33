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

#include <cmath>
#include <limits>

#include "obic/error.hpp"
#include "obic/msssim.hpp"
#include "obic/pipeline.hpp"

namespace obic {

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: shape mismatch");
  double se = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(se / static_cast<double>(a.numel()));
}

EvalReport evaluate(const Model& model, const Tensor& original, std::span<const std::uint8_t> bytes) {
  const Container c = read_container(bytes);
  if (c.header.width != original.dim(2) || c.header.height != original.dim(1)) {
    throw ShapeError("evaluate: container size differs from the original image");
  }
  const Tensor recon = decode_image(model, bytes);
  EvalReport r;
  const SizeBreakdown sizes = size_breakdown(c);
  const double pixels = static_cast<double>(c.header.width) * c.header.height;
  r.bytes = bytes.size();
  r.bpp_total = 8.0 * static_cast<double>(bytes.size()) / pixels;
  r.bpp_obj = 8.0 * static_cast<double>(sizes.obj) / pixels;
  r.bpp_bkg = 8.0 * static_cast<double>(sizes.bkg) / pixels;
  r.bpp_overhead = 8.0 * static_cast<double>(sizes.overhead) / pixels;
  r.psnr_db = psnr(original, recon);
  r.msssim = msssim(original, recon);

  // The pixel mask is not stored; its latent-resolution upsampling gives the
  // same latent mask, and is exact input for the feature domain.
  PixelMask pm(original.dim(2), original.dim(1));
  for (std::size_t y = 0; y < pm.height; ++y) {
    for (std::size_t x = 0; x < pm.width; ++x) pm.at(y, x) = c.mask.at(y / kLatentStride, x / kLatentStride);
  }
  r.clip_count = count_clipping(model, original, pm, c.header.domain);
  return r;
}

}  // namespace obic
