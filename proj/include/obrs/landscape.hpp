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

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "obrs/acceptance.hpp"
#include "obrs/dist.hpp"
#include "obrs/fdiv.hpp"
#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

struct LossEval {
  double loss = 0.0;
  double c_K = 1.0;
  double M = 1.0;
  double rate = 1.0;
};

/// Training-with-OBRS objective on a proposal table:
///   D_f(P || tilde P) = E_q[(a/Z) f(r / (a/Z))],  a = min(r c_K/M, 1),
/// where Z = E_q[a] (= 1/K whenever K <= M). Atoms where tilde p vanishes
/// contribute through the perspective limit p * f'(inf).
inline LossEval twobrs_loss(const Generator& gen, const ProposalTable& t, double K,
                            double eps = kExactEps) {
  const double M = t.max_ratio();
  const auto ck = solve_c_K(t, K, M, eps);
  const double tau = ck.tau();
  const double Z = ck.degenerate ? 1.0 : ck.rate;
  CompensatedSum s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    // tilde p_i = q_i a_i / Z with q_i a_i = min(tau p_i, q_i)
    const double qa = ck.degenerate ? t.q[i] : std::min(tau * t.p[i], t.q[i]);
    s += perspective(gen, t.p[i], qa / Z);
  }
  return {s.value(), ck.c_K, M, Z};
}

/// Exact on finite supports.
inline LossEval twobrs_loss(const Generator& gen, const FiniteDist& p, const FiniteDist& q, double K) {
  return twobrs_loss(gen, ProposalTable::from_finite(p, q), K);
}

/// 1D mixtures by trapezoid quadrature (>= 4096 nodes) over the union of
/// mean +- 8 std.
inline LossEval twobrs_loss(const Generator& gen, const Mixture1D& p, const Mixture1D& q, double K,
                            std::size_t nodes = kMinQuadratureNodes) {
  const auto d = discretize(p, q, std::max(nodes, kMinQuadratureNodes));
  ProposalTable t{{d.p.probs().begin(), d.p.probs().end()}, {d.q.probs().begin(), d.q.probs().end()}};
  return twobrs_loss(gen, t, K);
}

/// |twobrs_loss - D_f(P || refined_finite(P_hat, OBRS_K))|.
inline double primal_identity_check(const Generator& gen, const FiniteDist& p, const FiniteDist& q,
                                    double K) {
  const double loss = twobrs_loss(gen, p, q, K).loss;
  const double direct = divergence_finite(gen, p, obrs_refine(p, q, K).dist).value;
  return std::fabs(loss - direct);
}

struct LossSurface {
  std::vector<double> thetas;
  std::vector<double> budgets;
  std::vector<std::vector<double>> losses;  // [theta][budget]
  Generator gen;
  std::size_t nodes = kMinQuadratureNodes;
  double target_spacing = kFig3TargetSpacing;

  [[nodiscard]] std::vector<double> column(std::size_t k) const {
    std::vector<double> c(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) c[i] = losses[i][k];
    return c;
  }
};

inline std::vector<double> default_theta_grid() { return linspace(0.1, 2.5, 241); }
inline std::vector<double> default_budgets() { return {1.0, 2.0, 5.0}; }

/// Loss over the fig3_family(theta) models for each budget.
inline LossSurface landscape_1d(std::span<const double> thetas, std::span<const double> budgets,
                                const Generator& gen, std::size_t nodes = kMinQuadratureNodes,
                                double target_spacing = kFig3TargetSpacing) {
  LossSurface s;
  s.thetas.assign(thetas.begin(), thetas.end());
  s.budgets.assign(budgets.begin(), budgets.end());
  s.gen = gen;
  s.nodes = std::max(nodes, kMinQuadratureNodes);
  s.target_spacing = target_spacing;
  for (double th : thetas) {
    if (!(th > 0.0)) throw DomainError("landscape_1d: theta must be > 0");
    const auto fam = fig3_family(th, target_spacing);
    const auto d = discretize(fam.target, fam.model, s.nodes);
    ProposalTable t{{d.p.probs().begin(), d.p.probs().end()}, {d.q.probs().begin(), d.q.probs().end()}};
    std::vector<double> row;
    row.reserve(budgets.size());
    for (double K : budgets) row.push_back(twobrs_loss(gen, t, K).loss);
    s.losses.push_back(std::move(row));
  }
  return s;
}

/// Number of strict interior local minima.
inline std::size_t local_minima_count(std::span<const double> v) {
  if (v.size() < 3) throw DomainError("local_minima_count: need at least 3 points");
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] < v[i - 1] && v[i] < v[i + 1]) ++n;
  return n;
}

struct FitResult {
  double best_mu = 0.0;
  double best_sigma = 1.0;
  double best_loss = kInf;
  double K = 1.0;
  std::vector<double> mus;
  std::vector<double> sigmas;
  std::vector<double> losses;  // row-major [mu][sigma]

  [[nodiscard]] double loss_at(std::size_t i_mu, std::size_t i_sigma) const {
    return losses[i_mu * sigmas.size() + i_sigma];
  }
};

inline std::vector<double> default_fit_mus() { return linspace(-3.0, 3.0, 121); }
inline std::vector<double> default_fit_sigmas() { return linspace(0.2, 3.0, 141); }

/// Exhaustive grid search of twobrs_loss over N(mu, sigma^2) models; ties go
/// to the lowest (mu, sigma) index.
inline FitResult fit_grid(const Generator& gen, const Mixture1D& p, std::span<const double> mus,
                          std::span<const double> sigmas, double K,
                          std::size_t nodes = kMinQuadratureNodes) {
  FitResult fr;
  fr.K = K;
  fr.mus.assign(mus.begin(), mus.end());
  fr.sigmas.assign(sigmas.begin(), sigmas.end());
  fr.losses.reserve(mus.size() * sigmas.size());
  for (double mu : mus) {
    for (double sd : sigmas) {
      if (!(sd > 0.0)) throw DomainError("fit_grid: sigma must be > 0");
      const double loss = twobrs_loss(gen, p, fig4_model(mu, sd), K, nodes).loss;
      if (std::isnan(loss)) throw DomainError("fit_grid: loss is NaN at mu=" + std::to_string(mu));
      fr.losses.push_back(loss);
      if (loss < fr.best_loss) {
        fr.best_loss = loss;
        fr.best_mu = mu;
        fr.best_sigma = sd;
      }
    }
  }
  return fr;
}

}  // namespace obrs
