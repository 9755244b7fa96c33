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

#include <gtest/gtest.h>

#include <random>

#include "obic/error.hpp"
#include "obic/masking.hpp"

namespace obic {
namespace {

Tensor random_latent(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  return uniform_tensor({c, h, w}, 5.0, rng);
}

LatentMask random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  LatentMask m(h, w);
  std::bernoulli_distribution coin(0.4);
  for (auto& b : m.bits) b = coin(rng) ? 1 : 0;
  return m;
}

TEST(DownsampleMask, GeometryMatchesStride) {
  const LatentMask m = downsample_mask(PixelMask(320, 320, 0));
  EXPECT_EQ(m.height, 20u);
  EXPECT_EQ(m.width, 20u);
  EXPECT_EQ(m.object_count(), 0u);
}

TEST(DownsampleMask, AllObjectGivesAllOnes) {
  const LatentMask m = downsample_mask(PixelMask(64, 48, 1));
  EXPECT_EQ(m.object_count(), 12u);
}

TEST(DownsampleMask, ExactTieCountsAsObject) {
  PixelMask pm(32, 16, 0);
  int set = 0;
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 16; x < 32; ++x) {
      if ((x + y) % 2 == 0) {
        pm.at(y, x) = 1;
        ++set;
      }
    }
  }
  ASSERT_EQ(set, 128);
  const LatentMask m = downsample_mask(pm);
  EXPECT_EQ(m.at(0, 0), 0);
  EXPECT_EQ(m.at(0, 1), 1);
  pm.at(0, 16) = 0;
  EXPECT_EQ(downsample_mask(pm).at(0, 1), 0);
}

TEST(DownsampleMask, RejectsIndivisibleSize) {
  EXPECT_THROW(downsample_mask(PixelMask(40, 32)), ShapeError);
}

TEST(DownsampleMask, MonotoneInObjectPixels) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  PixelMask pm(64, 64);
  for (auto& b : pm.bits) b = coin(rng) ? 1 : 0;
  LatentMask before = downsample_mask(pm);
  for (int step = 0; step < 200; ++step) {
    pm.bits[rng() % pm.bits.size()] = 1;
    const LatentMask after = downsample_mask(pm);
    for (std::size_t i = 0; i < after.bits.size(); ++i) EXPECT_GE(after.bits[i], before.bits[i]);
    before = after;
  }
}

TEST(SplitLatent, AllOnesKeepsEverythingInObject) {
  std::mt19937_64 rng(1);
  const Tensor f = random_latent(3, 4, 4, rng);
  const auto [obj, bkg] = split_latent(f, LatentMask(4, 4, 1));
  EXPECT_EQ(obj, f);
  EXPECT_EQ(bkg, Tensor(f.shape()));
}

TEST(SplitLatent, AllZerosKeepsEverythingInBackground) {
  std::mt19937_64 rng(2);
  const Tensor f = random_latent(3, 4, 4, rng);
  const auto [obj, bkg] = split_latent(f, LatentMask(4, 4, 0));
  EXPECT_EQ(obj, Tensor(f.shape()));
  EXPECT_EQ(bkg, f);
}

TEST(SplitLatent, ComplementaryAndExactForRandomPairs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 1 + rng() % 6, w = 1 + rng() % 6, c = 1 + rng() % 4;
    const Tensor f = random_latent(c, h, w, rng);
    const LatentMask m = random_mask(h, w, rng);
    const auto [obj, bkg] = split_latent(f, m);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t i = (ch * h + y) * w + x;
          EXPECT_EQ(obj[i] + bkg[i], f[i]);
          EXPECT_EQ(obj[i] * bkg[i], 0.0);
          if (m.at(y, x) == 0) EXPECT_EQ(obj[i], 0.0);
          if (m.at(y, x) == 1) EXPECT_EQ(bkg[i], 0.0);
        }
      }
    }
    EXPECT_EQ(merge_latents(obj, bkg), f);
    EXPECT_EQ(merge_latents(bkg, obj), f);
  }
}

TEST(SplitLatent, RejectsExtentMismatch) {
  EXPECT_THROW(split_latent(Tensor({2, 4, 4}), LatentMask(4, 5)), ShapeError);
}

TEST(MergeLatents, MissingOperandIsZero) {
  std::mt19937_64 rng(4);
  const Tensor f = random_latent(2, 3, 3, rng);
  EXPECT_EQ(merge_latents(f, std::nullopt), f);
  EXPECT_EQ(merge_latents(std::nullopt, f), f);
  EXPECT_EQ(merge_latents(f, Tensor(f.shape())), f);
  EXPECT_THROW(merge_latents(f, Tensor({2, 3, 4})), ShapeError);
}

TEST(PixelDomainSplit, AllOnesGivesImageAndBlack) {
  std::mt19937_64 rng(5);
  const Tensor img = uniform_tensor({3, 16, 16}, 1.0, rng);
  const auto [obj, bkg] = pixel_domain_split(img, PixelMask(16, 16, 1));
  EXPECT_EQ(obj, img);
  EXPECT_EQ(bkg, Tensor(img.shape()));
}

TEST(PixelDomainSplit, CheckerboardIsComplementary) {
  std::mt19937_64 rng(6);
  const Tensor img = uniform_tensor({3, 16, 16}, 1.0, rng);
  PixelMask pm(16, 16);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) pm.at(y, x) = (x + y) % 2;
  }
  const auto [obj, bkg] = pixel_domain_split(img, pm);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) {
        const std::size_t i = (c * 16 + y) * 16 + x;
        EXPECT_EQ(obj[i] + bkg[i], img[i]);
        EXPECT_EQ((pm.at(y, x) ? bkg : obj)[i], 0.0);
      }
    }
  }
  EXPECT_THROW(pixel_domain_split(img, PixelMask(8, 16)), ShapeError);
}

}  // namespace
}  // namespace obic
