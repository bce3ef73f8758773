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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "obrs/acceptance.hpp"
#include "obrs/fdiv.hpp"
#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs::oracle {

inline constexpr double kTolerance = 1e-9;
inline constexpr double kBoundTolerance = 1e-10;
inline constexpr double kDirichletFloor = 1e-4;

// ---------------------------------------------------------------------------
// Random instances.

/// Dirichlet(1, ..., 1) draw with every atom floored at `floor` and renormalised.
template <class Rng>
FiniteDist random_simplex(std::size_t n, Rng& rng, double floor = kDirichletFloor) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = g(rng);
    s += x;
  }
  for (auto& x : v) x = std::max(x / s, floor);
  return FiniteDist::normalized(std::move(v));
}

struct Instance {
  FiniteDist p;
  FiniteDist q;
  double K = 1.0;
  double M = 1.0;
  std::uint64_t seed = 0;
};

/// (P, P_hat) on n atoms and K drawn log-uniform in [1, M].
inline Instance random_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Instance ins;
  ins.seed = seed;
  ins.p = random_simplex(n, rng);
  ins.q = random_simplex(n, rng);
  ins.M = std::exp(max_divergence(ins.p, ins.q).value);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ins.K = std::exp(u(rng) * std::log(ins.M));
  ins.K = std::clamp(ins.K, 1.0, ins.M);
  return ins;
}

// ---------------------------------------------------------------------------
// Feasible acceptance functions for problem: min D_f(P || tilde P_a)
// subject to E_q[a] >= 1/K, 0 <= a <= 1.

struct FeasibleAcceptance {
  std::vector<double> a;
  double rate = 1.0;
};

namespace detail {

// Rescales a raw acceptance vector a -> min(s a, 1) so that E_q[a] = 1/K.
inline FeasibleAcceptance rescale_to_budget(const FiniteDist& q, std::vector<double> raw, double K) {
  if (K == 1.0) {
    FeasibleAcceptance out{std::vector<double>(q.size(), 1.0), 1.0};
    return out;
  }
  ProposalTable t;
  t.q.assign(q.probs().begin(), q.probs().end());
  t.p.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) t.p[i] = q[i] * raw[i];
  const auto sol = solve_slope(t, 1.0 / K, 1e-12);
  FeasibleAcceptance out;
  out.a.resize(q.size());
  CompensatedSum rate;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out.a[i] = std::min(sol.tau * raw[i], 1.0);
    rate += q[i] * out.a[i];
  }
  out.rate = rate.value();
  return out;
}

}  // namespace detail

/// Uniform draw in [0,1]^n rescaled (with clipping) to acceptance rate
/// exactly 1/K; the rescaling is a water-level solve on the unclipped
/// coordinates.
template <class Rng>
FeasibleAcceptance random_feasible_acceptance(const FiniteDist& q, double K, Rng& rng) {
  if (!(K >= 1.0)) throw DomainError("random_feasible_acceptance: infeasible for K < 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(q.size());
  for (auto& v : raw) v = u(rng);
  return detail::rescale_to_budget(q, std::move(raw), K);
}

/// Multiplicative log-normal perturbation of `center`, rescaled to rate 1/K.
template <class Rng>
FeasibleAcceptance random_feasible_near(const FiniteDist& q, std::span<const double> center, double K,
                                        double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> raw(center.begin(), center.end());
  for (auto& v : raw) v = std::min(1.0, v * std::exp(scale * n(rng)));
  return detail::rescale_to_budget(q, std::move(raw), K);
}

// ---------------------------------------------------------------------------
// Optimality of the OBRS acceptance against random feasible acceptances.

struct GeneratorVerdict {
  Generator gen;
  double obrs_value = 0.0;
  double min_gap = kInf;  // min over trials of D(random) - D(OBRS)
  std::size_t violations = 0;
  std::vector<double> worst_acceptance;
};

struct OptimalityReport {
  double K = 1.0;
  std::size_t trials = 0;
  std::vector<double> obrs_acceptance;
  std::vector<GeneratorVerdict> verdicts;

  [[nodiscard]] std::size_t violations() const {
    std::size_t v = 0;
    for (const auto& g : verdicts) v += g.violations;
    return v;
  }
};

/// Compares OBRS at budget K with `trials` random feasible acceptances for
/// every generator in `gens` on the same draws. Half of the trials are
/// uniform draws, the other half are perturbations of the OBRS acceptance.
template <class Rng>
OptimalityReport optimality_check(std::span<const Generator> gens, const FiniteDist& p,
                                  const FiniteDist& q, double K, std::size_t trials, Rng& rng) {
  const auto ck = solve_c_K(p, q, K);
  const auto best = refined_finite(p, q, ck.spec(K));
  OptimalityReport rep;
  rep.K = K;
  rep.trials = trials;
  rep.obrs_acceptance = best.acceptance;
  for (const auto& g : gens) {
    GeneratorVerdict v;
    v.gen = g;
    v.obrs_value = divergence_finite(g, p, best.dist).value;
    rep.verdicts.push_back(std::move(v));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto fa = (t % 2 == 0)
                        ? random_feasible_acceptance(q, K, rng)
                        : random_feasible_near(q, best.acceptance, K, std::pow(10.0, -1.0 - 5.0 * u(rng)), rng);
    const auto trial = refined_finite(q, fa.a);
    for (auto& v : rep.verdicts) {
      const double gap = divergence_finite(v.gen, p, trial.dist).value - v.obrs_value;
      if (gap < v.min_gap) {
        v.min_gap = gap;
        v.worst_acceptance = fa.a;
      }
      if (gap < -kTolerance) ++v.violations;
    }
  }
  return rep;
}

template <class Rng>
OptimalityReport optimality_check(const Generator& gen, const FiniteDist& p, const FiniteDist& q,
                                  double K, std::size_t trials, Rng& rng) {
  const Generator gens[] = {gen};
  return optimality_check(std::span<const Generator>(gens), p, q, K, trials, rng);
}

// ---------------------------------------------------------------------------
// Improvement bounds.

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
  double slack = 0.0;  // rhs - lhs
  std::optional<std::size_t> witness;

  // Mixture witness p_alpha = q + alpha (p - q) used by the general bound,
  // or the geometric witness p_beta ~ q^(1-beta) p^beta used by the KL bound.
  double witness_param = 0.0;
  bool witness_feasible = true;  // p_w <= K q atomwise
  double witness_divergence = 0.0;
  bool limit_case = false;
};

inline BoundReport make_verdict(BoundReport r) {
  r.slack = r.rhs - r.lhs;
  r.satisfied = r.lhs <= r.rhs + kBoundTolerance;
  return r;
}

/// D_f(P || tilde P_OBRS) <= (1 - min(1, (K-1)/M)) D_f(P || P_hat).
/// Divergences are shifted by -f(1) so every generator has f(1) = 0 (only
/// GAN moves, by +log 4).
inline BoundReport bound_check_general(const Generator& gen, const FiniteDist& p, const FiniteDist& q,
                                       double K) {
  const double off = f_offset(gen);
  const double M = std::exp(max_divergence(p, q).value);
  const auto refined = obrs_refine(p, q, K);
  BoundReport r;
  const double base = divergence_finite(gen, p, q).value - off;
  r.lhs = divergence_finite(gen, p, refined.dist).value - off;
  r.rhs = (1.0 - std::min(1.0, (K - 1.0) / M)) * base;

  // alpha = min(1, (K - 1) inf q/p)
  double inf_ratio = kInf;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) inf_ratio = std::min(inf_ratio, q[i] / p[i]);
  const double alpha = std::min(1.0, (K - 1.0) * inf_ratio);
  std::vector<double> pa(p.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pa[i] = q[i] + alpha * (p[i] - q[i]);
    const double excess = pa[i] - K * q[i];
    if (excess > 1e-12 * std::max(1.0, K * q[i]) && excess > worst) {
      worst = excess;
      r.witness = i;
    }
  }
  r.witness_param = alpha;
  r.witness_feasible = !r.witness.has_value();
  r.witness_divergence = divergence_finite(gen, p, FiniteDist::normalized(std::move(pa))).value - off;
  r = make_verdict(r);
  // The OBRS optimum can never be worse than the feasible witness.
  if (r.witness_feasible && r.lhs > r.witness_divergence + kBoundTolerance) r.satisfied = false;
  return r;
}

/// KL(P || tilde P_OBRS) <= (1 - g)(KL(P || P_hat) - D^R_g(P || P_hat)),
/// g = log K / log M. Reported, not asserted: the geometric witness
/// p_g ~ q^(1-g) p^g is checked for p_g <= K q and its first violating atom
/// is returned in `witness`.
inline BoundReport bound_check_kl(const FiniteDist& p, const FiniteDist& q, double K) {
  const auto kl = Generator::kl();
  const double M = std::exp(max_divergence(p, q).value);
  const auto refined = obrs_refine(p, q, K);
  BoundReport r;
  r.lhs = divergence_finite(kl, p, refined.dist).value;
  double g = 1.0;
  if (M > 1.0) g = std::log(K) / std::log(M);
  if (g >= 1.0) {
    g = 1.0;
    r.limit_case = true;
  }
  r.witness_param = g;
  const double base = divergence_finite(kl, p, q).value;
  r.rhs = r.limit_case ? 0.0 : (1.0 - g) * (base - renyi_extended(g, p, q));

  // Geometric interpolation p_g = q^(1-g) p^g / Z.
  std::vector<double> pg(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0 || (p[i] == 0.0 && g > 0.0)) continue;
    pg[i] = std::exp((1.0 - g) * std::log(q[i]) + (g > 0.0 ? g * std::log(p[i]) : 0.0));
  }
  const auto geo = FiniteDist::normalized(std::move(pg));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (geo[i] > K * q[i] * (1.0 + 1e-12)) {
      r.witness = i;
      r.witness_feasible = false;
      break;
    }
  }
  r.witness_divergence = divergence_finite(kl, p, geo).value;
  return make_verdict(r);
}

// ---------------------------------------------------------------------------
// Budget ball B_K(P_hat) = {tilde P : D_max(tilde P || P_hat) <= log K}.

struct BallMembership {
  bool member = false;
  double max_divergence = 0.0;
  std::optional<std::size_t> witness;        // violating atom when not a member
  std::optional<TabulatedAcceptance> acceptance;  // realising acceptance when a member
};

inline BallMembership ball_membership(const FiniteDist& tilde, const FiniteDist& q, double K) {
  require_same_support(tilde, q);
  BallMembership out;
  MaxDivergence md{};
  try {
    md = max_divergence(tilde, q);
  } catch (const AbsoluteContinuityError& e) {
    out.member = false;
    out.max_divergence = kInf;
    out.witness = e.atom;
    return out;
  }
  out.max_divergence = md.value;
  out.member = md.value <= std::log(K) + 1e-12;
  if (out.member) {
    out.acceptance = acceptance_from_target(tilde, q, K);
  } else {
    out.witness = md.argmax;
  }
  return out;
}

}  // namespace obrs::oracle
