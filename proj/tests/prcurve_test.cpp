/*
 * Copyright 2026 The OBRS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "obrs/oracle.hpp"
#include "obrs/prcurve.hpp"

using namespace obrs;

namespace {

const FiniteDist kP{0.5, 0.5};
const FiniteDist kQ{0.8, 0.2};

void expect_identity(const PRCurve& c, double tol) {
  for (const auto& pt : c.points) {
    if (pt.lambda == 0.0 || std::isinf(pt.lambda)) continue;
    EXPECT_NEAR(pt.alpha, pt.lambda * pt.beta, tol) << "lambda " << pt.lambda;
  }
}

void expect_monotone(const PRCurve& c, double tol) {
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].alpha, c.points[i - 1].alpha - tol);
    EXPECT_LE(c.points[i].beta, c.points[i - 1].beta + tol);
  }
}

}  // namespace

TEST(PRPoint, Examples) {
  const auto same = pr_point(kP, kP, 1.0);
  EXPECT_DOUBLE_EQ(same.alpha, 1.0);
  EXPECT_DOUBLE_EQ(same.beta, 1.0);

  const auto zero = pr_point(kP, kQ, 0.0);
  EXPECT_EQ(zero.alpha, 0.0);
  EXPECT_EQ(zero.beta, 1.0);

  const auto one = pr_point(kP, kQ, 1.0);
  EXPECT_NEAR(one.alpha, 0.7, 1e-15);
  EXPECT_NEAR(one.beta, 0.7, 1e-15);
}

TEST(PRPoint, InfiniteLambda) {
  const auto pt = pr_point(kP, kQ, std::numeric_limits<double>::infinity());
  EXPECT_EQ(pt.alpha, 1.0);
  EXPECT_EQ(pt.beta, 0.0);
}

TEST(PRPoint, NegativeLambdaRejected) { EXPECT_THROW(pr_point(kP, kQ, -1.0), DomainError); }

TEST(PRCurveTest, IdenticalDistributionsOnEnvelope) {
  const auto grid = logspace(1e-3, 1e3, 61);
  const auto c = pr_curve(kQ, kQ, grid);
  for (const auto& pt : c.points) {
    EXPECT_NEAR(pt.alpha, std::min(pt.lambda, 1.0), 1e-15);
    EXPECT_NEAR(pt.beta, std::min(1.0 / pt.lambda, 1.0), 1e-15);
  }
}

TEST(PRCurveTest, DisjointSupportsHaveNoPrecision) {
  const auto p = FiniteDist::normalized({1.0, 1.0, 1e-15, 1e-15});
  const auto q = FiniteDist::normalized({1e-15, 1e-15, 1.0, 1.0});
  const auto grid = logspace(1e-3, 1e3, 31);
  for (const auto& pt : pr_curve(p, q, grid).points) EXPECT_LT(pt.alpha, 1e-11);
}

TEST(PRCurveTest, TwoPointHandSums) {
  // direct summation oracle: lambda 0.5 -> (0.45, 0.9), 1 -> (0.7, 0.7), 2 -> (1.0, 0.5)
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto c = pr_curve(kP, kQ, grid);
  const double alpha[] = {0.45, 0.7, 1.0}, beta[] = {0.9, 0.7, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(c.points[i].alpha, alpha[i], 1e-15);
    EXPECT_NEAR(c.points[i].beta, beta[i], 1e-15);
  }
  EXPECT_EQ(c.mode, PRMode::Exact);
}

TEST(PRCurveTest, UnsortedGridRejected) {
  const std::vector<double> grid{2.0, 1.0};
  EXPECT_THROW(pr_curve(kP, kQ, grid), DomainError);
}

TEST(PRCurveTest, IdentityAndMonotonicityOnRandomInstances) {
  const auto grid = logspace(1e-4, 1e4, 101);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto ins = oracle::random_instance(2 + s % 31, 300 + s);
    const auto c = pr_curve(ins.p, ins.q, grid);
    expect_identity(c, 1e-12);
    expect_monotone(c, 1e-15);
  }
}

TEST(PRCurveTest, QuadratureMixture) {
  const auto [p, q] = fig2_pair();
  const auto grid = logspace(1e-2, 1e2, 41);
  const auto c = pr_curve(p, q, grid);
  EXPECT_EQ(c.mode, PRMode::Quadrature);
  EXPECT_GE(c.n, kMinQuadratureNodes);
  expect_identity(c, 1e-6);
  expect_monotone(c, 1e-12);
}

TEST(PRCurveTest, MonteCarloAgreesWithQuadrature) {
  const auto [p, q] = fig2_pair();
  const std::vector<double> grid{0.25, 1.0, 4.0};
  const auto exact = pr_curve(p, q, grid);
  const auto mc = pr_curve_mc(ratio(p, q), p, q, grid, 100000, 9);
  EXPECT_EQ(mc.mode, PRMode::MonteCarlo);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(mc.points[i].alpha, exact.points[i].alpha, 4 * mc.points[i].stderr_alpha + 1e-12);
    EXPECT_NEAR(mc.points[i].beta, exact.points[i].beta, 4 * mc.points[i].stderr_beta + 1e-12);
    const double se = mc.points[i].stderr_alpha + grid[i] * mc.points[i].stderr_beta;
    EXPECT_NEAR(mc.points[i].alpha, grid[i] * mc.points[i].beta, 3 * se + 1e-12);
  }
}

TEST(DefaultGrid, StraddlesRegimeBoundary) {
  const double tau = 0.37;
  const auto g = default_lambda_grid(tau);
  EXPECT_EQ(g.size(), 201u);
  EXPECT_NEAR(g.front(), 1e-3 * tau, 1e-18);
  EXPECT_NEAR(g.back(), 1e3 * tau, 1e-9);
  EXPECT_NEAR(g[100], tau, 1e-12);
}

TEST(Theorem3Transform, UnitBudgetIsIdentity) {
  const auto grid = logspace(1e-2, 1e2, 21);
  const auto base = pr_curve(kP, kQ, grid);
  // K = 1: c_K / M >= every ratio^-1 so each point sits in the scaled regime
  const auto out = theorem3_transform(base, 1.0, 1e6, 2.5);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(out.points[i].lambda, base.points[i].lambda);
    EXPECT_EQ(out.points[i].alpha, base.points[i].alpha);
    EXPECT_EQ(out.points[i].beta, base.points[i].beta);
  }
}

TEST(Theorem3Transform, ScaledRegime) {
  PRCurve base;
  base.points.push_back({0.1, 0.2, 2.0, 0.0, 0.0});
  const auto out = theorem3_transform(base, 2.0, 1.5, 2.5);
  EXPECT_DOUBLE_EQ(out.points[0].lambda, 0.2);
  EXPECT_DOUBLE_EQ(out.points[0].alpha, 0.4);
  EXPECT_DOUBLE_EQ(out.points[0].beta, 2.0);
}

TEST(Theorem3Transform, SaturatedRegime) {
  PRCurve base;
  base.points.push_back({5.0, 1.0, 0.2, 0.0, 0.0});
  const auto out = theorem3_transform(base, 2.0, 1.5, 2.5);
  EXPECT_DOUBLE_EQ(out.points[0].lambda, 10.0);
  EXPECT_DOUBLE_EQ(out.points[0].alpha, 1.0);
  EXPECT_DOUBLE_EQ(out.points[0].beta, 0.1);
}

TEST(Theorem3Transform, RejectsBudgetAboveM) {
  EXPECT_THROW(theorem3_transform(PRCurve{}, 3.0, 1.0, 2.5), DomainError);
}

TEST(VerifyTheorem3, TwoPoint) {
  const auto rep = verify_theorem3(kP, kQ, 2.0);
  EXPECT_LE(rep.max_deviation(), 1e-10);
  EXPECT_LE(rep.max_identity_residual, 1e-12);
}

TEST(VerifyTheorem3, UnbudgetedEndpoint) {
  const auto rep = verify_theorem3(kP, kQ, 2.5);
  EXPECT_DOUBLE_EQ(rep.c_K, 1.0);
  EXPECT_LE(rep.max_deviation(), 1e-10);
}

TEST(VerifyTheorem3, RandomInstances) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto ins = oracle::random_instance(2 + s % 31, 900 + s);
    const auto rep = verify_theorem3(ins.p, ins.q, ins.K);
    EXPECT_LE(rep.max_deviation(), 1e-10) << "seed " << ins.seed;
    EXPECT_LE(rep.max_identity_residual, 1e-12);
  }
}

TEST(VerifyTheorem3, MixtureQuadrature) {
  const auto [p, q] = fig2_pair();
  const auto rep = verify_theorem3(p, q, 2.0);
  EXPECT_LE(rep.max_deviation(), 1e-4);
  EXPECT_LE(rep.max_identity_residual, 1e-6);
}

TEST(VerifyTheorem3, PrecisionFloorAndImprovement) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto ins = oracle::random_instance(12, 40 + s);
    const auto rep = verify_theorem3(ins.p, ins.q, ins.K);
    const double tau = rep.c_K / rep.M;
    for (std::size_t i = 0; i < rep.base.points.size(); ++i) {
      const auto& b = rep.base.points[i];
      const auto& r = rep.refined.points[i];
      // matched beta across the lambda -> K lambda reparameterization
      if (b.lambda > tau) continue;
      EXPECT_GE(r.alpha, b.alpha - 1e-12);
      if (b.lambda >= 1.0 / rep.M) {
        EXPECT_GE(r.alpha, std::min(1.0, ins.K / rep.M) - 1e-12);
      }
    }
  }
}
