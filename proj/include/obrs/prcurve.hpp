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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "obrs/acceptance.hpp"
#include "obrs/dist.hpp"
#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

// Precision/recall between a target P and a model Q, for lambda in [0, inf]:
//   alpha_l = E_Q[min(l p/q, 1)] = sum min(l p, q)
//   beta_l  = E_P[min(1, q/(l p))] = sum min(p, q/l)
// so alpha_l = l * beta_l.

enum class PRMode { Exact, Quadrature, MonteCarlo };

inline const char* to_string(PRMode m) {
  switch (m) {
    case PRMode::Exact: return "exact";
    case PRMode::Quadrature: return "quadrature";
    case PRMode::MonteCarlo: return "mc";
  }
  return "?";
}

struct PRPoint {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 1.0;
  double stderr_alpha = 0.0;
  double stderr_beta = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  PRMode mode = PRMode::Exact;
  std::size_t n = 0;  // MC sample size or quadrature nodes
};

/// Exact point for two pmfs over a shared support (also used on
/// quadrature discretisations).
inline PRPoint pr_point(const FiniteDist& p, const FiniteDist& q, double lambda) {
  require_same_support(p, q);
  if (!(lambda >= 0.0)) throw DomainError("pr_point: lambda must be >= 0");
  PRPoint pt{lambda, 0.0, 0.0, 0.0, 0.0};
  CompensatedSum a, b;
  if (lambda == 0.0) {
    for (std::size_t i = 0; i < p.size(); ++i) b += p[i];
    pt.beta = b.value();
    return pt;
  }
  if (std::isinf(lambda)) {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0.0) a += q[i];
    pt.alpha = a.value();
    return pt;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    a += std::min(lambda * p[i], q[i]);
    b += std::min(p[i], q[i] / lambda);
  }
  pt.alpha = a.value();
  pt.beta = b.value();
  return pt;
}

inline PRCurve pr_curve(const FiniteDist& p, const FiniteDist& q, std::span<const double> lambdas,
                        PRMode mode = PRMode::Exact) {
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw DomainError("pr_curve: lambda grid must be sorted");
  PRCurve c;
  c.mode = mode;
  c.n = mode == PRMode::Exact ? 0 : p.size();
  c.points.reserve(lambdas.size());
  for (double l : lambdas) c.points.push_back(pr_point(p, q, l));
  return c;
}

/// 1D mixtures by composite trapezoid quadrature over the union of
/// mean +- 8 std (at least 4096 nodes).
inline PRCurve pr_curve(const Mixture1D& p, const Mixture1D& q, std::span<const double> lambdas,
                        std::size_t nodes = kMinQuadratureNodes) {
  const auto d = discretize(p, q, std::max(nodes, kMinQuadratureNodes));
  auto c = pr_curve(d.p, d.q, lambdas, PRMode::Quadrature);
  c.n = d.spec.nodes;
  return c;
}

/// Monte Carlo point: alpha from draws of Q, beta from draws of P. The same
/// draws are reused for every lambda of a curve.
template <class RatioFn, class PDist, class QDist>
PRCurve pr_curve_mc(const RatioFn& ratio_fn, const PDist& p, const QDist& q,
                    std::span<const double> lambdas, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("pr_curve_mc: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::vector<double> rq(n), rp(n);
  for (auto& v : rq) v = ratio_fn(sample_one(q, rng));
  for (auto& v : rp) v = ratio_fn(sample_one(p, rng));
  PRCurve c;
  c.mode = PRMode::MonteCarlo;
  c.n = n;
  for (double l : lambdas) {
    RunningStats sa, sb;
    for (double r : rq) sa.push(std::min(l * r, 1.0));
    for (double r : rp) sb.push(r > 0.0 ? std::min(1.0, 1.0 / (l * r)) : 1.0);
    c.points.push_back({l, sa.mean(), sb.mean(), sa.stderr_of_mean(), sb.stderr_of_mean()});
  }
  return c;
}

/// Log-spaced grid of 201 points over [1e-3 tau, 1e3 tau], tau = c_K / M.
inline std::vector<double> default_lambda_grid(double tau, std::size_t n = 201) {
  return logspace(1e-3 * tau, 1e3 * tau, n);
}

/// Predicted PR curve after OBRS at budget K <= M. A base point at lambda'
/// maps to the refined point at lambda = K lambda':
///   lambda' <= c_K/M : (min(1, K alpha'), beta')
///   otherwise        : (1, 1/lambda)
inline PRCurve theorem3_transform(const PRCurve& base, double K, double c_K, double M) {
  if (!(K >= 1.0)) throw DomainError("theorem3_transform: K must be >= 1");
  if (K > M * (1.0 + 1e-12)) throw DomainError("theorem3_transform: requires K <= M");
  const double tau = c_K / M;
  PRCurve out;
  out.mode = base.mode;
  out.n = base.n;
  out.points.reserve(base.points.size());
  for (const auto& b : base.points) {
    const double lam = K * b.lambda;
    if (b.lambda <= tau) {
      out.points.push_back({lam, std::min(1.0, K * b.alpha), b.beta, K * b.stderr_alpha, b.stderr_beta});
    } else {
      out.points.push_back({lam, 1.0, std::isinf(lam) ? 0.0 : 1.0 / lam, 0.0, 0.0});
    }
  }
  return out;
}

struct Theorem3Report {
  double max_dalpha = 0.0;
  double max_dbeta = 0.0;
  double max_identity_residual = 0.0;  // |alpha - lambda beta| over both curves
  double K = 1.0;
  double c_K = 1.0;
  double M = 1.0;
  PRCurve base;
  PRCurve refined;    // computed directly at lambda = K lambda'
  PRCurve predicted;  // theorem3_transform(base)

  [[nodiscard]] double max_deviation() const { return std::max(max_dalpha, max_dbeta); }
};

namespace detail {

inline void compare_curves(Theorem3Report& rep) {
  for (std::size_t i = 0; i < rep.refined.points.size(); ++i) {
    const auto& a = rep.refined.points[i];
    const auto& b = rep.predicted.points[i];
    rep.max_dalpha = std::max(rep.max_dalpha, std::fabs(a.alpha - b.alpha));
    rep.max_dbeta = std::max(rep.max_dbeta, std::fabs(a.beta - b.beta));
  }
  for (const auto* c : {&rep.base, &rep.refined}) {
    for (const auto& pt : c->points) {
      if (pt.lambda == 0.0 || std::isinf(pt.lambda)) continue;
      rep.max_identity_residual =
          std::max(rep.max_identity_residual, std::fabs(pt.alpha - pt.lambda * pt.beta));
    }
  }
}

inline std::vector<double> scaled(std::span<const double> grid, double K) {
  std::vector<double> out(grid.begin(), grid.end());
  for (auto& l : out) l *= K;
  return out;
}

}  // namespace detail

/// Builds the OBRS refinement of Q at budget K, computes its PR curve
/// directly and compares it with the transform of the base curve.
/// An empty grid selects default_lambda_grid(c_K / M).
inline Theorem3Report verify_theorem3(const FiniteDist& p, const FiniteDist& q, double K,
                                      std::span<const double> lambda_grid = {}) {
  const auto ck = solve_c_K(p, q, K);
  const auto refined = refined_finite(p, q, ck.spec(K));
  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  if (grid.empty()) grid = default_lambda_grid(ck.tau());

  Theorem3Report rep;
  rep.K = K;
  rep.c_K = ck.c_K;
  rep.M = ck.M;
  rep.base = pr_curve(p, q, grid);
  rep.refined = pr_curve(p, refined.dist, detail::scaled(grid, K));
  rep.predicted = theorem3_transform(rep.base, K, ck.c_K, ck.M);
  detail::compare_curves(rep);
  return rep;
}

/// Quadrature version for 1D mixtures. c_K and Z come from the base
/// discretisation; the refined density tilde p(x) = q(x) a(x) / Z is then
/// integrated on an independent, finer node set.
inline Theorem3Report verify_theorem3(const Mixture1D& p, const Mixture1D& q, double K,
                                      std::span<const double> lambda_grid = {},
                                      std::size_t nodes = kMinQuadratureNodes) {
  const auto d = discretize(p, q, std::max(nodes, kMinQuadratureNodes));
  const auto table = ProposalTable::from_finite(d.p, d.q);
  const double M = table.max_ratio();
  const auto ck = solve_c_K(table, K, M, kExactEps);
  const double tau = ck.tau();
  const double Z = ck.degenerate ? 1.0 : ck.rate;

  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  if (grid.empty()) grid = default_lambda_grid(tau);

  Theorem3Report rep;
  rep.K = K;
  rep.c_K = ck.c_K;
  rep.M = M;
  rep.base = pr_curve(d.p, d.q, grid, PRMode::Quadrature);
  rep.base.n = d.spec.nodes;

  QuadratureSpec fine = d.spec;
  fine.nodes = 3 * d.spec.nodes + 1;
  const auto rule = trapezoid(fine);
  std::vector<double> pv(rule.x.size()), tv(rule.x.size());
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double px = p.density(rule.x[i]);
    const double qx = q.density(rule.x[i]);
    const double a = ck.degenerate ? qx : std::min(tau * px, qx);  // q(x) a(x)
    pv[i] = rule.w[i] * px;
    tv[i] = rule.w[i] * a / Z;
  }
  rep.refined.mode = PRMode::Quadrature;
  rep.refined.n = fine.nodes;
  for (double l0 : grid) {
    const double l = K * l0;
    CompensatedSum a, b;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      a += std::min(l * pv[i], tv[i]);
      b += std::min(pv[i], tv[i] / l);
    }
    rep.refined.points.push_back({l, a.value(), b.value(), 0.0, 0.0});
  }
  rep.predicted = theorem3_transform(rep.base, K, ck.c_K, M);
  detail::compare_curves(rep);
  return rep;
}

}  // namespace obrs
