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
#include <random>

#include "obic/error.hpp"
#include "obic/gradcheck.hpp"
#include "obic/graph.hpp"
#include "obic/ops.hpp"

namespace obic {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

TEST(TensorTest, RejectsRankAboveFour) { EXPECT_THROW(Tensor({1, 1, 1, 1, 1}), ShapeError); }

TEST(TensorTest, RejectsValueCountMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(GraphTest, IdentityGraph) {
  Graph g;
  const Tensor x = random_tensor({1, 2, 3, 3}, 1);
  const Var v = g.constant(x);
  EXPECT_EQ(g.value(v), x);
}

TEST(GraphTest, UnitPointwiseConvIsIdentity) {
  Graph g;
  const Tensor x = random_tensor({1, 1, 5, 5}, 2);
  const Var out = ops::conv2d(g, g.constant(x), g.constant(Tensor({1, 1, 1, 1}, 1.0)),
                              g.constant(Tensor({1}, 0.0)), {1, 0});
  EXPECT_EQ(g.value(out), x);
}

TEST(GraphTest, OnesConvolutionCenterIsNine) {
  Graph g;
  const Var out = ops::conv2d(g, g.constant(Tensor({1, 1, 5, 5}, 1.0)),
                              g.constant(Tensor({1, 1, 3, 3}, 1.0)), g.constant(Tensor({1}, 0.0)),
                              {1, 1});
  const Tensor& y = g.value(out);
  EXPECT_EQ(y.at(0, 0, 2, 2), 9.0);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0);
  EXPECT_EQ(y.at(0, 0, 0, 2), 6.0);
}

TEST(GraphTest, GradientOfSumIsOnes) {
  Parameter p{random_tensor({2, 3, 4, 4}, 3), {}, true};
  Graph g;
  const Var x = g.parameter("x", p);
  g.backward(ops::sum(g, x));
  for (double v : g.grad(x).values()) EXPECT_EQ(v, 1.0);
}

TEST(GraphTest, GradientOfSquaredSumIsTwiceInput) {
  Parameter p{random_tensor({1, 2, 3, 3}, 4), {}, true};
  Graph g;
  const Var x = g.parameter("x", p);
  g.backward(ops::sum(g, ops::mul(g, x, x)));
  for (std::size_t i = 0; i < p.value.numel(); ++i) {
    EXPECT_DOUBLE_EQ(g.grad(x)[i], 2.0 * p.value[i]);
  }
}

TEST(GraphTest, BackwardBeforeForwardThrows) {
  Graph g;
  EXPECT_THROW(g.backward(Var{}), GraphError);
  EXPECT_THROW(g.backward(Var{0}), GraphError);
}

TEST(GraphTest, NonFiniteOutputReportsFirstOffendingNode) {
  Graph g;
  const Var x = g.constant(Tensor({1, 1, 2, 2}, 800.0));
  const Var y = ops::scale(g, x, 1.0);
  try {
    ops::exp(g, y);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.node(), 2u);
    EXPECT_EQ(e.op(), "exp");
  }
}

TEST(GraphTest, ForwardIsPure) {
  ParameterSet ps;
  ps.add("w", random_tensor({3, 2, 3, 3}, 5));
  ps.add("b", random_tensor({3}, 6));
  const Tensor x = random_tensor({1, 2, 6, 6}, 7);
  auto run = [&] {
    Graph g;
    return g.value(ops::leaky_relu(
        g, ops::conv2d(g, g.constant(x), g.parameter(ps, "w"), g.parameter(ps, "b"), {2, 1})));
  };
  EXPECT_EQ(run(), run());
}

TEST(GraphTest, BackwardIsLinearInLosses) {
  ParameterSet ps;
  ps.add("w", random_tensor({2, 2, 3, 3}, 8));
  ps.add("b", random_tensor({2}, 9));
  const Tensor x = random_tensor({1, 2, 5, 5}, 10);
  auto build = [&](Graph& g, int which) {
    const Var y = ops::conv2d(g, g.constant(x), g.parameter(ps, "w"), g.parameter(ps, "b"), {1, 1});
    const Var l1 = ops::sum(g, ops::mul(g, y, y));
    const Var l2 = ops::sum(g, ops::logistic_cdf(g, y));
    return which == 0 ? ops::add(g, l1, l2) : (which == 1 ? l1 : l2);
  };
  ParameterSet joint = ps, separate = ps;
  joint.zero_grad();
  separate.zero_grad();
  {
    Graph g;
    g.backward(build(g, 0));
    g.accumulate_grads(joint);
  }
  for (int which : {1, 2}) {
    Graph g;
    g.backward(build(g, which));
    g.accumulate_grads(separate);
  }
  for (const auto& name : {"w", "b"}) {
    const Tensor& a = joint.at(name).grad;
    const Tensor& b = separate.at(name).grad;
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * (1 + std::abs(a[i])));
  }
}

TEST(GraphTest, AccumulateBeforeBackwardThrows) {
  ParameterSet ps;
  ps.add("w", Tensor({1}, 1.0));
  Graph g;
  g.parameter(ps, "w");
  EXPECT_THROW(g.accumulate_grads(ps), GraphError);
}

TEST(OpsTest, ConvTransposeGeometryDoublesExtent) {
  Graph g;
  const Var y = ops::conv_transpose2d(g, g.constant(Tensor({1, 3, 4, 5}, 1.0)),
                                      g.constant(Tensor({3, 2, 5, 5}, 0.1)),
                                      g.constant(Tensor({2}, 0.0)), {2, 2, 1});
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 2, 8, 10}));
}

TEST(OpsTest, GaussianLikelihoodStandardBin) {
  Graph g;
  const Var p = ops::gaussian_likelihood(g, g.constant(Tensor({1}, 0.0)),
                                         g.constant(Tensor({1}, 0.0)),
                                         g.constant(Tensor({1}, 1.0)), 1.0 / 65536);
  // Φ(0.5) − Φ(−0.5)
  EXPECT_NEAR(g.value(p)[0], std::erf(0.5 / std::sqrt(2.0)), 1e-15);
}

TEST(OpsTest, NegLog2RejectsZero) {
  Graph g;
  EXPECT_THROW(ops::neg_log2(g, g.constant(Tensor({2}, 0.0))), Error);
}

TEST(GradCheckTest, ElementwiseMultiply) {
  EXPECT_LT(grad_check(GradOp::multiply, {2, 3, 3}, 1e-4), 1e-4);
}

TEST(GradCheckTest, StridedConvolution) {
  EXPECT_LT(grad_check(GradOp::conv2d_stride2, {3, 8, 8}, 1e-4), 1e-4);
}

TEST(GradCheckTest, LogisticCdf) { EXPECT_LT(grad_check("logistic_cdf", {1, 4, 4}, 1e-4), 1e-4); }

TEST(GradCheckTest, UnsupportedOpThrows) {
  EXPECT_THROW(grad_check("softmax", {1, 4, 4}, 1e-4), Error);
}

class AllOpsGradCheck : public ::testing::TestWithParam<GradOp> {};

TEST_P(AllOpsGradCheck, MatchesFiniteDifferences) {
  const GradOp op = GetParam();
  const Shape shape = op == GradOp::msssim ? Shape{1, 32, 32} : Shape{2, 6, 6};
  EXPECT_LT(grad_check(op, shape, 1e-4, 3), 1e-4) << grad_op_name(op);
}

}  // namespace

void PrintTo(GradOp op, std::ostream* os) { *os << grad_op_name(op); }

namespace {

INSTANTIATE_TEST_SUITE_P(Ops, AllOpsGradCheck, ::testing::ValuesIn(all_grad_ops()),
                         [](const auto& info) { return std::string(grad_op_name(info.param)); });

}  // namespace
}  // namespace obic
