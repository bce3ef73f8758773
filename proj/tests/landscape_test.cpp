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
#include <vector>

#include "obrs/landscape.hpp"
#include "obrs/oracle.hpp"

using namespace obrs;

namespace {

const FiniteDist kP{0.5, 0.5};
const FiniteDist kQ{0.8, 0.2};

}  // namespace

TEST(TwobrsLoss, UnitBudgetIsPlainDivergence) {
  for (const auto& g : {Generator::kl(), Generator::gan(), Generator::tv(), Generator::reverse_kl()}) {
    EXPECT_NEAR(twobrs_loss(g, kP, kQ, 1.0).loss, divergence_finite(g, kP, kQ).value, 1e-15) << g.name();
  }
}

TEST(TwobrsLoss, TwoPointKL) {
  const auto e = twobrs_loss(Generator::kl(), kP, kQ, 2.0);
  EXPECT_NEAR(e.loss, 0.020410997260127565, 1e-12);
  EXPECT_NEAR(e.c_K, 1.5, 1e-12);
  EXPECT_NEAR(e.rate, 0.5, 1e-12);
}

TEST(TwobrsLoss, CollapseAboveM) {
  EXPECT_NEAR(twobrs_loss(Generator::kl(), kP, kQ, 2.5).loss, 0.0, 1e-15);
  EXPECT_NEAR(twobrs_loss(Generator::gan(), kP, kQ, 4.0).loss, -std::log(4.0), 1e-15);
}

TEST(TwobrsLoss, MixtureCollapseAboveM) {
  const auto p = fig4_model(0.0, 1.0), q = fig4_model(0.0, 1.5);
  EXPECT_NEAR(twobrs_loss(Generator::kl(), p, q, 2.0).loss, 0.0, 1e-8);
}

TEST(TwobrsLoss, MixtureUnitBudgetMatchesQuadrature) {
  const auto [p, q] = fig2_pair();
  const auto d = discretize(p, q);
  EXPECT_NEAR(twobrs_loss(Generator::gan(), p, q, 1.0).loss, divergence_finite(Generator::gan(), d.p, d.q).value,
              1e-12);
}

TEST(PrimalIdentity, Examples) {
  EXPECT_LE(primal_identity_check(Generator::kl(), kP, kQ, 2.0), 1e-12);
  EXPECT_LE(primal_identity_check(Generator::kl(), kP, kQ, 1.0), 1e-12);
}

TEST(PrimalIdentity, RandomGanInstances) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    std::mt19937_64 rng(s);
    const auto p = oracle::random_simplex(16, rng), q = oracle::random_simplex(16, rng);
    for (double K : {1.5, 2.0, 4.0}) EXPECT_LE(primal_identity_check(Generator::gan(), p, q, K), 1e-10);
  }
}

TEST(PrimalIdentity, RandomKlInstances) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto ins = oracle::random_instance(2 + s % 31, 5000 + s);
    EXPECT_LE(primal_identity_check(Generator::kl(), ins.p, ins.q, ins.K), 1e-10);
  }
}

TEST(TwobrsLoss, BudgetMonotoneExact) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto ins = oracle::random_instance(10, 6000 + s);
    for (const auto& g : {Generator::kl(), Generator::gan()}) {
      double prev = kInf;
      for (double K : logspace(1.0, ins.M, 9)) {
        const double v = twobrs_loss(g, ins.p, ins.q, K).loss;
        EXPECT_LE(v, prev + 1e-10);
        prev = v;
      }
    }
  }
}

TEST(LocalMinima, Examples) {
  const std::vector<double> mono{1, 2, 3, 4}, vee{3, 1, 2}, flat{1, 1, 1}, two{2, 1, 2, 1, 2};
  EXPECT_EQ(local_minima_count(mono), 0u);
  EXPECT_EQ(local_minima_count(vee), 1u);
  EXPECT_EQ(local_minima_count(flat), 0u);
  EXPECT_EQ(local_minima_count(two), 2u);
  const std::vector<double> tiny{1, 2};
  EXPECT_THROW(local_minima_count(tiny), DomainError);
}

TEST(Landscape, UnitColumnIsPlainDivergence) {
  const std::vector<double> thetas{0.5, 1.0, 1.5};
  const std::vector<double> budgets{1.0};
  const auto s = landscape_1d(thetas, budgets, Generator::gan());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const auto fam = fig3_family(thetas[i]);
    const auto d = discretize(fam.target, fam.model);
    EXPECT_NEAR(s.losses[i][0], divergence_finite(Generator::gan(), d.p, d.q).value, 1e-12);
  }
}

TEST(Landscape, DefaultGridProperties) {
  const auto thetas = default_theta_grid();
  const auto budgets = default_budgets();
  const auto s = landscape_1d(thetas, budgets, Generator::gan());
  ASSERT_EQ(s.losses.size(), 241u);
  for (const auto& row : s.losses) {
    for (double v : row) EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(row[1], row[0] + 1e-8);
    EXPECT_LE(row[2], row[1] + 1e-8);
  }
  // aligned means minimise the plain divergence
  const auto k1 = s.column(0);
  const auto it = std::min_element(k1.begin(), k1.end());
  // the wider model components pull the optimum one grid step below the target spacing
  EXPECT_NEAR(thetas[std::size_t(it - k1.begin())], kFig3TargetSpacing, 0.0101);
  EXPECT_LE(local_minima_count(s.column(2)), local_minima_count(k1));
}

TEST(Landscape, RejectsNonPositiveTheta) {
  const std::vector<double> thetas{0.0};
  const std::vector<double> budgets{1.0};
  EXPECT_THROW(landscape_1d(thetas, budgets, Generator::gan()), DomainError);
}

TEST(FitGrid, RecoversSingleGaussian) {
  const auto p = fig4_model(0.5, 1.2);
  const auto mus = linspace(-1.0, 1.0, 9), sigmas = linspace(0.4, 2.0, 9);
  const auto fr = fit_grid(Generator::gan(), p, mus, sigmas, 1.0);
  EXPECT_DOUBLE_EQ(fr.best_mu, 0.5);
  EXPECT_DOUBLE_EQ(fr.best_sigma, 1.2);
  EXPECT_NEAR(fr.best_loss, -std::log(4.0), 1e-12);
}

TEST(FitGrid, TiesGoToFirstIndex) {
  // symmetric target: mu and -mu tie exactly
  const auto p = fig4_target();
  const std::vector<double> mus{-2.0, 2.0}, sigmas{0.5};
  const auto fr = fit_grid(Generator::gan(), p, mus, sigmas, 1.0);
  EXPECT_EQ(fr.loss_at(0, 0), fr.loss_at(1, 0));
  EXPECT_EQ(fr.best_mu, -2.0);
}

TEST(FitGrid, CoarseLatticeMassCovering) {
  const auto p = fig4_target();
  const auto mus = linspace(-3.0, 3.0, 13), sigmas = linspace(0.2, 3.0, 29);
  const auto f1 = fit_grid(Generator::gan(), p, mus, sigmas, 1.0);
  const auto f2 = fit_grid(Generator::gan(), p, mus, sigmas, 2.0);
  EXPECT_GE(f2.best_sigma, f1.best_sigma);
  const double at1 = twobrs_loss(Generator::gan(), p, fig4_model(f1.best_mu, f1.best_sigma), 2.0).loss;
  EXPECT_LE(f2.best_loss, at1);
  for (std::size_t i = 0; i < f1.losses.size(); ++i) EXPECT_LE(f2.losses[i], f1.losses[i] + 1e-8);
}
