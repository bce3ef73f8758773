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
#include <limits>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "obrs/dist.hpp"
#include "obrs/fdiv.hpp"
#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

enum class AcceptanceKind { Unit, Unbudgeted, OBRS, DRS };

inline const char* to_string(AcceptanceKind k) {
  switch (k) {
    case AcceptanceKind::Unit: return "unit";
    case AcceptanceKind::Unbudgeted: return "unbudgeted";
    case AcceptanceKind::OBRS: return "obrs";
    case AcceptanceKind::DRS: return "drs";
  }
  return "?";
}

/// Acceptance function a(x) = g(r(x)) in terms of the likelihood ratio r.
///
///   Unit        a = 1
///   Unbudgeted  a = r / M
///   OBRS        a = min(r c_K / M, 1)       (a = 1 when K <= 1)
///   DRS         a = min(r e^-gamma / M, 1)  (clipped)
struct AcceptanceSpec {
  AcceptanceKind kind = AcceptanceKind::Unit;
  double K = 1.0;
  double c_K = 1.0;
  double M = 1.0;
  double gamma = 0.0;

  static AcceptanceSpec unit() { return {}; }
  static AcceptanceSpec unbudgeted(double M) {
    AcceptanceSpec s{AcceptanceKind::Unbudgeted, 1.0, 1.0, M, 0.0};
    s.validate();
    return s;
  }
  static AcceptanceSpec obrs(double K, double c_K, double M) {
    AcceptanceSpec s{AcceptanceKind::OBRS, K, c_K, M, 0.0};
    s.validate();
    return s;
  }
  static AcceptanceSpec drs(double gamma, double M) {
    AcceptanceSpec s{AcceptanceKind::DRS, 1.0, 1.0, M, gamma};
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == AcceptanceKind::Unit) return;
    if (!(M > 0.0) || !std::isfinite(M)) throw DomainError("AcceptanceSpec: M must be finite and > 0");
    if (kind == AcceptanceKind::OBRS) {
      if (!(K >= 1.0)) throw DomainError("AcceptanceSpec: OBRS needs K >= 1");
      if (!(c_K >= 1.0)) throw DomainError("AcceptanceSpec: OBRS needs c_K >= 1");
    }
    if (kind == AcceptanceKind::DRS && !std::isfinite(gamma)) {
      throw DomainError("AcceptanceSpec: DRS gamma must be finite");
    }
  }

  /// Acceptance probability for a proposal with likelihood ratio r.
  [[nodiscard]] double operator()(double r) const {
    switch (kind) {
      case AcceptanceKind::Unit: return 1.0;
      case AcceptanceKind::Unbudgeted: return std::min(r / M, 1.0);
      case AcceptanceKind::OBRS:
        if (K <= 1.0) return 1.0;
        return std::min(r * (c_K / M), 1.0);
      case AcceptanceKind::DRS: return std::min(r * (std::exp(-gamma) / M), 1.0);
    }
    return 1.0;
  }

  friend bool operator==(const AcceptanceSpec&, const AcceptanceSpec&) = default;
};

inline double accept_prob(const AcceptanceSpec& spec, double r) { return spec(r); }

template <class RatioFn, class X>
double accept_prob(const AcceptanceSpec& spec, const RatioFn& ratio_fn, const X& x) {
  return spec(ratio_fn(x));
}

/// Acceptance spec bound to a ratio function; callable on points.
template <class RatioFn>
struct Acceptor {
  AcceptanceSpec spec;
  RatioFn ratio_fn;

  template <class X>
  double operator()(const X& x) const {
    return spec(ratio_fn(x));
  }
};

template <class RatioFn>
Acceptor<RatioFn> bind(AcceptanceSpec spec, RatioFn ratio_fn) {
  return {spec, std::move(ratio_fn)};
}

// ---------------------------------------------------------------------------
// Proposal tables: a finite measure pair on which every expectation under
// P_hat is an exact sum. Finite supports use the pmfs, quadrature uses the
// node masses, and sample mode uses q_i = 1/n, p_i = r(x_i)/n.

struct ProposalTable {
  std::vector<double> p;  // target mass (or ratio-weighted proposal mass)
  std::vector<double> q;  // proposal mass

  static ProposalTable from_finite(const FiniteDist& p, const FiniteDist& q) {
    require_absolutely_continuous(p, q);
    return {{p.probs().begin(), p.probs().end()}, {q.probs().begin(), q.probs().end()}};
  }

  static ProposalTable from_ratios(std::span<const double> ratios) {
    const double w = 1.0 / static_cast<double>(ratios.size());
    ProposalTable t;
    t.p.reserve(ratios.size());
    t.q.assign(ratios.size(), w);
    for (double r : ratios) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("ProposalTable: bad ratio sample");
      t.p.push_back(r * w);
    }
    return t;
  }

  /// Ratio values at `n` draws from the proposal.
  template <class RatioFn, class Dist>
  static ProposalTable from_samples(const RatioFn& ratio_fn, const Dist& proposal, std::size_t n,
                                    std::uint64_t seed) {
    if (n == 0) throw DomainError("ProposalTable: need at least one sample");
    std::mt19937_64 rng(seed);
    std::vector<double> r(n);
    for (auto& v : r) v = ratio_fn(sample_one(proposal, rng));
    return from_ratios(r);
  }

  [[nodiscard]] std::size_t size() const { return q.size(); }

  /// E_q[min(tau r, 1)] = sum_i min(tau p_i, q_i).
  [[nodiscard]] double rate(double tau) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < q.size(); ++i) s += std::min(tau * p[i], q[i]);
    return s.value();
  }

  /// sup r over atoms carrying proposal mass. Atoms with q = 0 never reach
  /// the acceptance step and are ignored.
  [[nodiscard]] double max_ratio() const {
    double m = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      if (q[i] > 0.0) m = std::max(m, p[i] / q[i]);
    return m;
  }

  /// min r over atoms with p > 0 and q > 0.
  [[nodiscard]] double min_positive_ratio() const {
    double m = kInf;
    for (std::size_t i = 0; i < q.size(); ++i)
      if (p[i] > 0.0 && q[i] > 0.0) m = std::min(m, p[i] / q[i]);
    return m;
  }
};

// ---------------------------------------------------------------------------
// M estimation.

enum class MMode { Exact, Samples, Grid };

struct MEstimate {
  double value = 1.0;
  MMode mode = MMode::Exact;
  std::size_t n = 0;  // samples or grid points examined
};

inline const char* to_string(MMode m) {
  switch (m) {
    case MMode::Exact: return "exact";
    case MMode::Samples: return "samples";
    case MMode::Grid: return "grid";
  }
  return "?";
}

inline MEstimate estimate_M(const FiniteDist& p, const FiniteDist& q) {
  return {std::exp(max_divergence(p, q).value), MMode::Exact, p.size()};
}

inline MEstimate estimate_M(const ProposalTable& t, MMode mode = MMode::Exact) {
  return {t.max_ratio(), mode, t.size()};
}

template <class RatioFn, class Dist>
MEstimate estimate_M_samples(const RatioFn& ratio_fn, const Dist& proposal, std::size_t n,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, ratio_fn(sample_one(proposal, rng)));
  return {m, MMode::Samples, n};
}

template <class RatioFn, class Point>
MEstimate estimate_M_grid(const RatioFn& ratio_fn, std::span<const Point> grid) {
  double m = 0.0;
  for (const auto& x : grid) m = std::max(m, ratio_fn(x));
  return {m, MMode::Grid, grid.size()};
}

// ---------------------------------------------------------------------------
// Rate calibration.

inline constexpr double kExactEps = 1e-9;
inline constexpr double kSampleEps = 1e-6;
inline constexpr int kMaxBisection = 200;

/// Slope tau of a(x) = min(tau r(x), 1) that reaches a prescribed rate.
struct SlopeSolution {
  double tau = 0.0;
  double rate = 0.0;
  int iterations = 0;
};

namespace detail {

// Exact root of the piecewise-linear rate on the active set at tau.
inline double polish_slope(const ProposalTable& t, double tau, double target) {
  CompensatedSum capped, free_p;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (tau * t.p[i] >= t.q[i]) {
      capped += t.q[i];
    } else {
      free_p += t.p[i];
    }
  }
  const double denom = free_p.value();
  if (!(denom > 0.0)) return tau;
  const double cand = (target - capped.value()) / denom;
  return cand > 0.0 ? cand : tau;
}

}  // namespace detail

/// Bisection (in log tau) for sum_i min(tau p_i, q_i) = target, followed by
/// an exact polish on the final active set.
inline SlopeSolution solve_slope(const ProposalTable& t, double target, double eps,
                                 int max_iter = kMaxBisection) {
  if (!(target > 0.0) || target > 1.0) throw DomainError("solve_slope: target rate must be in (0,1]");
  const double r_max = t.max_ratio();
  const double r_min = t.min_positive_ratio();
  if (!std::isfinite(r_min)) throw DomainError("solve_slope: target has no mass under the proposal");
  // Ratios may overflow or underflow on quadrature tails; keep the bracket
  // inside the finite positive doubles.
  double hi = std::min(1.0 / r_min, std::numeric_limits<double>::max());
  const double rate_hi = t.rate(hi);
  if (rate_hi < target - eps) {
    throw ConvergenceError("solve_slope: maximal reachable rate " + std::to_string(rate_hi) +
                               " is below the target " + std::to_string(target),
                           hi, hi);
  }
  double lo = r_max > 0.0 ? std::max(1.0 / r_max, std::numeric_limits<double>::min()) : hi;
  while (t.rate(lo) > target && lo > 1e-300) lo *= 0.5;

  auto rate = [&](double tau) { return t.rate(tau); };
  SlopeSolution sol;
  if (std::fabs(rate_hi - target) <= eps && target >= 1.0) return {hi, rate_hi, 0};
  auto res = bisect_increasing(rate, target, lo, hi, eps, max_iter, true);
  sol = {res.x, res.residual + target, res.iterations};
  for (double seed_tau : {res.x, res.lo, res.hi}) {
    const double cand = detail::polish_slope(t, seed_tau, target);
    const double cand_rate = t.rate(cand);
    if (std::fabs(cand_rate - target) < std::fabs(sol.rate - target)) sol = {cand, cand_rate, sol.iterations};
  }
  if (!(std::fabs(sol.rate - target) <= eps)) {
    throw ConvergenceError("solve_slope: no convergence after " + std::to_string(res.iterations) +
                               " iterations; final bracket [" + std::to_string(res.lo) + ", " +
                               std::to_string(res.hi) + "]",
                           res.lo, res.hi);
  }
  return sol;
}

struct CKSolution {
  double c_K = 1.0;
  double M = 1.0;
  double slope = 1.0;  // c_K / M, kept separately so an overflowed M stays usable
  double rate = 1.0;
  int iterations = 0;
  bool degenerate = false;   // K = 1: acceptance is the unit function
  bool unbudgeted = false;   // K >= M: c_K = 1

  [[nodiscard]] double tau() const { return slope; }
  [[nodiscard]] AcceptanceSpec spec(double K) const { return AcceptanceSpec::obrs(K, c_K, M); }
};

/// c_K such that E_q[min(r c_K / M, 1)] = 1/K.
inline CKSolution solve_c_K(const ProposalTable& t, double K, double M, double eps) {
  if (!(K >= 1.0) || !std::isfinite(K)) throw DomainError("solve_c_K: K must be >= 1");
  if (!(M > 0.0)) throw DomainError("solve_c_K: M must be > 0");
  CKSolution out;
  out.M = M;
  if (K == 1.0) {
    out.slope = std::min(1.0 / t.min_positive_ratio(), std::numeric_limits<double>::max());
    out.c_K = std::max(1.0, out.slope * M);
    out.rate = 1.0;
    out.degenerate = true;
    return out;
  }
  if (K >= M) {
    out.c_K = 1.0;
    out.slope = 1.0 / M;
    out.rate = t.rate(out.slope);
    out.unbudgeted = true;
    return out;
  }
  const auto sol = solve_slope(t, 1.0 / K, eps);
  out.slope = sol.tau;
  out.c_K = std::max(1.0, sol.tau * M);
  out.rate = sol.rate;
  out.iterations = sol.iterations;
  return out;
}

inline CKSolution solve_c_K(const FiniteDist& p, const FiniteDist& q, double K,
                            double eps = kExactEps) {
  const auto t = ProposalTable::from_finite(p, q);
  return solve_c_K(t, K, t.max_ratio(), eps);
}

struct DRSSolution {
  double gamma = 0.0;
  double rate = 1.0;
  int iterations = 0;

  [[nodiscard]] AcceptanceSpec spec(double M) const { return AcceptanceSpec::drs(gamma, M); }
};

/// gamma such that the clipped DRS acceptance reaches `target_rate`.
inline DRSSolution drs_gamma_for_rate(const ProposalTable& t, double M, double target_rate,
                                      double eps) {
  if (!(M > 0.0)) throw DomainError("drs_gamma_for_rate: M must be > 0");
  const auto sol = solve_slope(t, target_rate, eps);
  return {-std::log(sol.tau * M), sol.rate, sol.iterations};
}

// ---------------------------------------------------------------------------
// Execution.

struct BudgetExhausted : std::runtime_error {
  std::size_t accepted;
  std::size_t draws;
  BudgetExhausted(std::size_t acc, std::size_t drw)
      : std::runtime_error("rejection_sample: budget exhausted after " + std::to_string(drw) +
                           " draws with " + std::to_string(acc) + " acceptances"),
        accepted(acc),
        draws(drw) {}
};

template <class Point>
struct SampleRun {
  std::vector<Point> samples;
  std::size_t draws_used = 0;
  std::size_t ratio_evals = 0;

  [[nodiscard]] double measured_rate() const {
    return draws_used ? static_cast<double>(samples.size()) / static_cast<double>(draws_used) : 0.0;
  }
};

/// Draws proposals until `n_target` are accepted. `accept(x)` returns the
/// acceptance probability of proposal x.
template <class Sampler, class Accept, class Rng>
auto rejection_sample(Sampler&& sampler, Accept&& accept, std::size_t n_target, Rng& rng,
                      std::size_t max_draws) {
  using Point = std::decay_t<decltype(sampler(rng))>;
  if (n_target == 0) throw DomainError("rejection_sample: n_target must be >= 1");
  SampleRun<Point> run;
  run.samples.reserve(n_target);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (run.samples.size() < n_target) {
    if (run.draws_used >= max_draws) throw BudgetExhausted(run.samples.size(), run.draws_used);
    auto x = sampler(rng);
    ++run.draws_used;
    const double a = accept(x);
    ++run.ratio_evals;
    if (unif(rng) < a) run.samples.push_back(std::move(x));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Exact refinement on finite supports.

struct RefinedDist {
  FiniteDist dist;
  std::vector<double> acceptance;
  double Z = 1.0;  // acceptance rate
};

inline RefinedDist refined_finite(const FiniteDist& q, std::vector<double> a) {
  if (a.size() != q.size()) throw SupportMismatch("refined_finite: acceptance has wrong length");
  CompensatedSum z;
  std::vector<double> m(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(a[i] >= 0.0) || a[i] > 1.0) throw DomainError("refined_finite: acceptance outside [0,1]");
    m[i] = q[i] * a[i];
    z += m[i];
  }
  const double Z = z.value();
  if (!(Z > 0.0)) throw DomainError("refined_finite: acceptance rate is zero");
  for (auto& v : m) v /= Z;
  // Renormalise through FiniteDist::normalized to keep the sum within 1e-12.
  return {FiniteDist::normalized(std::move(m)), std::move(a), Z};
}

inline std::vector<double> acceptance_vector(const AcceptanceSpec& spec, std::span<const double> ratios) {
  std::vector<double> a(ratios.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = spec(ratios[i]);
  return a;
}

inline RefinedDist refined_finite(const FiniteDist& p, const FiniteDist& q, const AcceptanceSpec& spec) {
  const auto r = ratio_vector(p, q);
  return refined_finite(q, acceptance_vector(spec, r));
}

/// OBRS refinement with c_K solved in exact mode.
inline RefinedDist obrs_refine(const FiniteDist& p, const FiniteDist& q, double K) {
  const auto ck = solve_c_K(p, q, K);
  return refined_finite(p, q, ck.spec(K));
}

struct OutOfBall : std::domain_error {
  std::size_t atom;
  double ratio;
  OutOfBall(std::size_t i, double r, double K)
      : std::domain_error("target outside the budget-" + std::to_string(K) + " ball at atom " +
                          std::to_string(i) + " (ratio " + std::to_string(r) + ")"),
        atom(i),
        ratio(r) {}
};

struct TabulatedAcceptance {
  std::vector<double> a;
  double rate = 1.0;
};

/// Acceptance a_i = tilde p_i / (K p_hat_i) realising tilde P from P_hat at
/// budget K; throws OutOfBall when some tilde p_i > K p_hat_i.
inline TabulatedAcceptance acceptance_from_target(const FiniteDist& tilde, const FiniteDist& q,
                                                  double K) {
  require_same_support(tilde, q);
  if (!(K >= 1.0)) throw DomainError("acceptance_from_target: K must be >= 1");
  const double log_k = std::log(K);
  TabulatedAcceptance out;
  out.a.assign(q.size(), 0.0);
  double worst = -kInf;
  std::size_t worst_atom = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (tilde[i] == 0.0) continue;
    const double lr = q[i] > 0.0 ? std::log(tilde[i]) - std::log(q[i]) : kInf;
    if (lr > worst) {
      worst = lr;
      worst_atom = i;
    }
  }
  if (worst > log_k + 1e-12) throw OutOfBall(worst_atom, std::exp(worst), K);
  CompensatedSum rate;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    out.a[i] = std::min(1.0, tilde[i] / (K * q[i]));
    rate += q[i] * out.a[i];
  }
  out.rate = rate.value();
  return out;
}

}  // namespace obrs
