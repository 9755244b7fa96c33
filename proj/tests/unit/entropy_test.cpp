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

#include <cmath>
#include <numeric>
#include <random>

#include "obic/entropy.hpp"
#include "obic/error.hpp"
#include "obic/ops.hpp"

namespace obic {
namespace {

double std_normal_cdf(double v) { return 0.5 * (1.0 + std::erf(v / std::sqrt(2.0))); }

TEST(Quantize, RoundsHalfAwayFromZero) {
  const auto r = quantize_round(Tensor({4}, std::vector<double>{1.4, -1.5, 0.0, 2.5}));
  EXPECT_EQ(r.values, Tensor({4}, std::vector<double>{1, -2, 0, 3}));
  EXPECT_EQ(r.clip_count, 0u);
}

TEST(Quantize, ClipsToAlphabetAndCounts) {
  const auto r = quantize_round(Tensor({3}, std::vector<double>{150.0, -190.0, 127.4}));
  EXPECT_EQ(r.values, Tensor({3}, std::vector<double>{127, -128, 127}));
  EXPECT_EQ(r.clip_count, 2u);
}

TEST(Quantize, DivergenceBeyondLimit) {
  EXPECT_THROW(quantize_round(Tensor({1}, std::vector<double>{200.5})), DivergenceError);
  EXPECT_THROW(quantize_round(Tensor({1}, std::vector<double>{NAN})), DivergenceError);
}

TEST(Quantize, NoiseStaysWithinHalfOpenUnitBin) {
  std::mt19937_64 rng(1);
  Graph g;
  const Tensor f = uniform_tensor({2, 8, 8}, 3.0, rng);
  const Var in = g.constant(f);
  const Var out = quantize_noise(g, in, rng);
  for (std::size_t i = 0; i < f.numel(); ++i) {
    const double d = g.value(out)[i] - f[i];
    EXPECT_GE(d, -0.5);
    EXPECT_LT(d, 0.5);
  }
}

TEST(Rate, SumsNegativeLogProbabilities) {
  EXPECT_DOUBLE_EQ(estimate_rate(std::vector<double>(10, 0.5)), 10.0);
  EXPECT_DOUBLE_EQ(estimate_rate(std::vector<double>(5, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(estimate_rate(std::vector<double>{0.25, 0.5}), 3.0);
  EXPECT_THROW(estimate_rate(std::vector<double>{0.5, 0.0}), Error);
  EXPECT_THROW(estimate_rate(std::vector<double>{-0.1}), Error);
}

TEST(Factorized, CentralBinClosedForm) {
  const double expect = 2.0 / (1.0 + std::exp(-0.5)) - 1.0;
  EXPECT_NEAR(logistic_bin_probability(0, 0.0, 1.0), expect, 1e-15);
  EXPECT_NEAR(logistic_bin_probability(0, 0.0, 1.0), 0.2449186624, 1e-9);
}

TEST(Factorized, EvenSymmetryAndMass) {
  for (double scale : {0.3, 1.0, 4.0, 8.0}) {
    double sum = 0;
    for (int q = kAlphabetMin; q <= kAlphabetMax; ++q) {
      sum += logistic_bin_probability(q, 0.0, scale);
      if (q > 0) EXPECT_EQ(logistic_bin_probability(q, 0, scale), logistic_bin_probability(-q, 0, scale));
    }
    // Floored far tails add at most alphabet·floor.
    EXPECT_LE(sum, 1.0 + kAlphabetSize * kProbabilityFloor);
    EXPECT_GE(sum, 0.999);
  }
}

TEST(Factorized, ModelMatchesScalarFormula) {
  ParameterSet ps;
  FactorizedModel m("hyper", 2);
  m.register_parameters(ps);
  ps.at("hyper.loc").value[1] = 0.7;
  ps.at("hyper.log_scale").value[1] = std::log(2.0);
  Graph g;
  const Tensor z({1, 2, 1, 2}, std::vector<double>{0, 1, -3, 2});
  const Var p = m.likelihood(g, ps, g.constant(z));
  EXPECT_NEAR(g.value(p)[0], logistic_bin_probability(0, 0, 1), 1e-15);
  EXPECT_NEAR(g.value(p)[3], logistic_bin_probability(2, 0.7, 2.0), 1e-15);
  EXPECT_NEAR(m.probability(ps, 1, -3), logistic_bin_probability(-3, 0.7, 2.0), 1e-15);
}

TEST(Conditional, StandardNormalCentralBin) {
  EXPECT_NEAR(gaussian_bin_probability(0, 0.0, 1.0), std_normal_cdf(0.5) - std_normal_cdf(-0.5), 1e-15);
  EXPECT_NEAR(gaussian_bin_probability(0, 0.0, 1.0), 0.3829249225, 1e-9);
}

TEST(Conditional, PeakedBinApproachesOne) {
  EXPECT_NEAR(gaussian_bin_probability(3, 3.0, kSigmaFloor), 1.0, 1e-12);
  EXPECT_EQ(gaussian_bin_probability(5, 3.0, kSigmaFloor), kProbabilityFloor);
}

TEST(CdfTables, UniformFourSymbols) {
  const CdfTable t = quantize_pmf(std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(t.cumulative(), (std::vector<std::uint32_t>{16384, 32768, 49152, 65536}));
}

TEST(CdfTables, RejectsDegenerateInput) {
  EXPECT_THROW(quantize_pmf(std::vector<double>{}), Error);
  EXPECT_THROW(quantize_pmf(std::vector<double>{0, 0}), Error);
  EXPECT_THROW(quantize_pmf(std::vector<double>{1, NAN}), Error);
  EXPECT_THROW(gaussian_table(0.0, 0.0), Error);
  EXPECT_THROW(logistic_table(NAN, 1.0), Error);
}

TEST(CdfTables, StrictlyIncreasingForAnyParameters) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> loc(-150, 150), ls(-14, 5);
  for (int i = 0; i < 300; ++i) {
    const double mu = loc(rng), s = std::exp(ls(rng));
    for (const CdfTable& t : {logistic_table(mu, s), gaussian_table(mu, std::max(s, kSigmaFloor))}) {
      ASSERT_EQ(t.size(), kAlphabetSize);
      EXPECT_EQ(t.cumulative().back(), kCdfTotal);
      for (std::size_t k = 0; k < t.size(); ++k) EXPECT_GE(t.frequency(k), 1u);
    }
  }
}

TEST(CdfTables, Deterministic) {
  EXPECT_EQ(gaussian_table(0.3, 1.7).hash(), gaussian_table(0.3, 1.7).hash());
  EXPECT_EQ(logistic_table(-2.0, 0.4), logistic_table(-2.0, 0.4));
}

TEST(CdfTables, QuantizedMassTracksProbability) {
  const CdfTable t = gaussian_table(0.2, 1.3);
  for (int q = -4; q <= 4; ++q) {
    const double p = gaussian_bin_probability(q, 0.2, 1.3);
    EXPECT_NEAR(t.frequency(symbol_of(q)) / 65536.0, p, 300.0 / 65536.0);
  }
}

class ConditionalModelTest : public ::testing::Test {
 protected:
  static constexpr std::size_t kC = 3, kH = 4, kW = 5;

  void SetUp() override {
    std::mt19937_64 rng(5);
    model_ = ConditionalModel("ctx", kC);
    model_.register_parameters(ps_, rng);
    for (auto& [name, p] : ps_) {
      if (name.ends_with("bias")) p.value = uniform_tensor(p.value.shape(), 0.5, rng);
    }
    hyper_ = uniform_tensor({1, 2 * kC, kH, kW}, 1.0, rng);
    std::uniform_int_distribution<int> q(-3, 3);
    latents_ = Tensor({1, kC, kH, kW});
    for (double& v : latents_.values()) v = q(rng);
  }

  ConditionalModel model_;
  ParameterSet ps_;
  Tensor hyper_;
  Tensor latents_;
};

TEST_F(ConditionalModelTest, PointwiseMatchesGraph) {
  for (bool ar : {true, false}) {
    Graph g;
    const auto p = model_.parameters(g, ps_, g.constant(hyper_), g.constant(latents_), ar);
    std::vector<double> mean(kC), scale(kC);
    for (std::size_t y = 0; y < kH; ++y) {
      for (std::size_t x = 0; x < kW; ++x) {
        model_.parameters_at(ps_, hyper_, latents_, y, x, ar, mean, scale);
        for (std::size_t c = 0; c < kC; ++c) {
          EXPECT_NEAR(mean[c], g.value(p.mean).at(0, c, y, x), 1e-12);
          EXPECT_NEAR(scale[c], g.value(p.scale).at(0, c, y, x), 1e-12);
        }
      }
    }
  }
}

TEST_F(ConditionalModelTest, ScaleRespectsFloor) {
  ps_.at("ctx.fusion1.bias").value.fill(-100.0);
  Graph g;
  const auto p = model_.parameters(g, ps_, g.constant(hyper_), g.constant(latents_), true);
  for (double s : g.value(p.scale).values()) EXPECT_GE(s, kSigmaFloor);
}

TEST_F(ConditionalModelTest, ContextIgnoresCurrentAndFuturePositions) {
  std::vector<double> m0(kC), s0(kC), m1(kC), s1(kC);
  model_.parameters_at(ps_, hyper_, latents_, 2, 2, true, m0, s0);
  Tensor changed = latents_;
  for (std::size_t c = 0; c < kC; ++c) {
    changed.at(0, c, 2, 2) += 5;
    changed.at(0, c, 2, 3) += 5;
    changed.at(0, c, 3, 0) += 5;
  }
  model_.parameters_at(ps_, hyper_, changed, 2, 2, true, m1, s1);
  EXPECT_EQ(m0, m1);
  EXPECT_EQ(s0, s1);
  changed.at(0, 0, 2, 1) += 1;
  model_.parameters_at(ps_, hyper_, changed, 2, 2, true, m1, s1);
  EXPECT_NE(m0, m1);
}

TEST_F(ConditionalModelTest, ZeroedContextEqualsHyperOnly) {
  ps_.at("ctx.context.weight").value.fill(0.0);
  ps_.at("ctx.context.bias").value.fill(0.0);
  std::vector<double> m0(kC), s0(kC), m1(kC), s1(kC);
  model_.parameters_at(ps_, hyper_, latents_, 1, 3, true, m0, s0);
  model_.parameters_at(ps_, hyper_, latents_, 1, 3, false, m1, s1);
  EXPECT_EQ(m0, m1);
  EXPECT_EQ(s0, s1);
}

TEST_F(ConditionalModelTest, NonCausalMaskIsDetected) {
  Tensor mask = causal_kernel_mask(ConditionalModel::kContextKernel);
  mask[2 * 5 + 2] = 1.0;
  model_.set_kernel_mask(mask);
  std::vector<double> m(kC), s(kC);
  EXPECT_THROW(model_.parameters_at(ps_, hyper_, latents_, 1, 1, true, m, s), CausalityError);
  mask[2 * 5 + 2] = 0.0;
  mask[3 * 5 + 0] = 1.0;
  model_.set_kernel_mask(mask);
  EXPECT_THROW(model_.parameters_at(ps_, hyper_, latents_, 1, 2, true, m, s), CausalityError);
}

TEST_F(ConditionalModelTest, RateGradientPassesFiniteDifference) {
  const std::string name = "ctx.fusion1.weight";
  auto rate = [&]() {
    Graph g;
    const Var yhat = g.constant(latents_);
    const auto p = model_.parameters(g, ps_, g.constant(hyper_), yhat, true);
    const Var bits = ops::sum(g, ops::neg_log2(g, model_.likelihood(g, yhat, p)));
    return std::pair{g.value(bits)[0], &g};
  };
  Graph g;
  const Var yhat = g.constant(latents_);
  const auto p = model_.parameters(g, ps_, g.constant(hyper_), yhat, true);
  const Var bits = ops::sum(g, ops::neg_log2(g, model_.likelihood(g, yhat, p)));
  g.backward(bits);
  ps_.zero_grad();
  g.accumulate_grads(ps_);
  Tensor& w = ps_.at(name).value;
  const Tensor grad = ps_.at(name).grad;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < w.numel(); i += 7) {
    const double keep = w[i];
    w[i] = keep + eps;
    const double up = rate().first;
    w[i] = keep - eps;
    const double down = rate().first;
    w[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-3});
    EXPECT_LT(std::abs(numeric - grad[i]) / denom, 1e-4) << "index " << i;
  }
}

TEST(CausalMask, TypeAShape) {
  const Tensor m = causal_kernel_mask(5);
  EXPECT_EQ(std::accumulate(m.values().begin(), m.values().end(), 0.0), 12.0);
  EXPECT_EQ(m[2 * 5 + 1], 1.0);
  EXPECT_EQ(m[2 * 5 + 2], 0.0);
  EXPECT_EQ(m[3 * 5 + 0], 0.0);
}

}  // namespace
}  // namespace obic
