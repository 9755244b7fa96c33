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

#include "common/fixtures.hpp"
#include "obic/error.hpp"
#include "obic/msssim.hpp"

namespace obic {
namespace {

TEST(Msssim, IdentityIsOne) {
  std::mt19937_64 rng(1);
  Tensor x = uniform_tensor({3, 64, 64}, 0.5, rng);
  for (double& v : x.values()) v += 0.5;
  EXPECT_NEAR(msssim(x, x), 1.0, 1e-9);
}

TEST(Msssim, Symmetric) {
  const auto [a, b] = testing::fixture_pair(64);
  EXPECT_NEAR(msssim(a, b), msssim(b, a), 1e-12);
}

TEST(Msssim, MatchesOracleSmall) {
  const auto [a, b] = testing::fixture_pair(64);
  EXPECT_NEAR(msssim(a, b), testing::kOracleMsssim64, 1e-4);
}

TEST(Msssim, MatchesOracleFullScale) {
  const auto [a, b] = testing::fixture_pair(192);
  EXPECT_NEAR(msssim(a, b), testing::kOracleMsssim192, 1e-4);
}

TEST(Msssim, BinaryInverseIsNearZero) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  Tensor x({3, 64, 64});
  for (double& v : x.values()) v = coin(rng) ? 1.0 : 0.0;
  Tensor inv = x;
  for (double& v : inv.values()) v = 1.0 - v;
  EXPECT_LT(msssim(x, inv), 0.01);
}

TEST(Msssim, RejectsSmallOrMismatched) {
  EXPECT_THROW(msssim(Tensor({3, 16, 16}), Tensor({3, 16, 16})), Error);
  EXPECT_THROW(msssim(Tensor({3, 32, 32}), Tensor({3, 32, 48})), Error);
}

TEST(Msssim, StaysInUnitInterval) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    Tensor a = uniform_tensor({3, 48, 40}, 0.5, rng), b = uniform_tensor({3, 48, 40}, 0.5, rng);
    for (double& v : a.values()) v += 0.5;
    for (double& v : b.values()) v += 0.5;
    const double s = msssim(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

}  // namespace
}  // namespace obic
