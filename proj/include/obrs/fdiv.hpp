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
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

enum class GeneratorKind { KL, ReverseKL, TotalVariation, GAN, PR };

/// An f-divergence generator. All logarithms are natural.
///
///   KL         f(u) = u log u                      f*(t) = exp(t - 1)
///   ReverseKL  f(u) = -log u                       f*(t) = -1 - log(-t),  t < 0
///   TV         f(u) = |u - 1| / 2                  (primal only)
///   GAN        f(u) = u log u - (u+1) log(u+1)     f*(t) = -log(1 - e^t), t < 0
///   PR(l)      f(u) = max(l u, 1) - max(l, 1)      f*(t) = t / l
///
/// GAN keeps the un-shifted generator, so D_GAN(P||P) = f(1) = -log 4.
struct Generator {
  GeneratorKind kind = GeneratorKind::KL;
  double lambda = 1.0;  // PR only

  static Generator kl() { return {GeneratorKind::KL, 1.0}; }
  static Generator reverse_kl() { return {GeneratorKind::ReverseKL, 1.0}; }
  static Generator tv() { return {GeneratorKind::TotalVariation, 1.0}; }
  static Generator gan() { return {GeneratorKind::GAN, 1.0}; }
  static Generator pr(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("PR generator needs lambda > 0");
    return {GeneratorKind::PR, lambda};
  }

  /// Parses "kl", "rkl", "tv", "gan" or "pr:LAMBDA".
  static Generator parse(const std::string& s) {
    if (s == "kl") return kl();
    if (s == "rkl" || s == "reverse_kl") return reverse_kl();
    if (s == "tv") return tv();
    if (s == "gan") return gan();
    if (s.rfind("pr:", 0) == 0) {
      std::size_t used = 0;
      const std::string tail = s.substr(3);
      double lam = 0.0;
      try {
        lam = std::stod(tail, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != tail.size()) throw DomainError("bad PR lambda in '" + s + "'");
      return pr(lam);
    }
    throw DomainError("unknown generator '" + s + "'");
  }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case GeneratorKind::KL: return "kl";
      case GeneratorKind::ReverseKL: return "rkl";
      case GeneratorKind::TotalVariation: return "tv";
      case GeneratorKind::GAN: return "gan";
      case GeneratorKind::PR: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "pr:%.17g", lambda);
        return buf;
      }
    }
    return "?";
  }

  /// Differentiable generators with a strictly increasing grad f*.
  [[nodiscard]] bool smooth() const {
    return kind == GeneratorKind::KL || kind == GeneratorKind::ReverseKL || kind == GeneratorKind::GAN;
  }

  friend bool operator==(const Generator&, const Generator&) = default;
};

struct DivergenceEstimate {
  double value = 0.0;   // nats
  double std_error = 0.0;  // 0 for exact evaluation
  std::size_t n = 0;    // 0 for exact evaluation

  [[nodiscard]] bool exact() const { return n == 0; }
};

inline double f_value(const Generator& g, double u) {
  if (!(u >= 0.0)) throw DomainError("f_value: u must be >= 0, got " + std::to_string(u));
  switch (g.kind) {
    case GeneratorKind::KL:
      return u == 0.0 ? 0.0 : u * std::log(u);
    case GeneratorKind::ReverseKL:
      return u == 0.0 ? kInf : -std::log(u);
    case GeneratorKind::TotalVariation:
      return 0.5 * std::fabs(u - 1.0);
    case GeneratorKind::GAN:
      if (u == 0.0) return 0.0;
      if (u < 1.0) return u * std::log(u) - (u + 1.0) * std::log1p(u);
      // u log u - (u+1) log(u+1) = u log(u/(u+1)) - log(u+1), no cancellation for large u
      return -u * std::log1p(1.0 / u) - std::log1p(u);
    case GeneratorKind::PR:
      return std::max(g.lambda * u, 1.0) - std::max(g.lambda, 1.0);
  }
  return 0.0;
}

/// f(1): 0 for every generator except GAN (-log 4).
inline double f_offset(const Generator& g) { return f_value(g, 1.0); }

/// f'(u) for smooth generators, u > 0.
inline double f_derivative(const Generator& g, double u) {
  if (!(u > 0.0)) throw DomainError("f_derivative: u must be > 0");
  switch (g.kind) {
    case GeneratorKind::KL: return std::log(u) + 1.0;
    case GeneratorKind::ReverseKL: return -1.0 / u;
    case GeneratorKind::GAN: return -std::log1p(1.0 / u);
    default: throw UnsupportedError("f_derivative: generator " + g.name() + " is not smooth");
  }
}

/// lim_{u->inf} f(u)/u, used for q * f(p/q) at q = 0.
inline double f_recession(const Generator& g) {
  switch (g.kind) {
    case GeneratorKind::KL: return kInf;
    case GeneratorKind::ReverseKL: return 0.0;
    case GeneratorKind::TotalVariation: return 0.5;
    case GeneratorKind::GAN: return 0.0;
    case GeneratorKind::PR: return g.lambda;
  }
  return kInf;
}

/// Perspective q * f(p / q) with the closure conventions 0*f(0/0) = 0 and
/// 0*f(p/0) = p * f_recession.
inline double perspective(const Generator& g, double p, double q) {
  if (q > 0.0) {
    if (p == 0.0) return q * f_value(g, 0.0);
    const double u = p / q;
    // a subnormal q can overflow the ratio; the term is then at its recession limit
    if (std::isfinite(u)) return q * f_value(g, u);
  }
  if (p == 0.0) return 0.0;
  return p * f_recession(g);
}

inline double fstar_value(const Generator& g, double t) {
  switch (g.kind) {
    case GeneratorKind::KL:
      return std::exp(t - 1.0);
    case GeneratorKind::ReverseKL:
      if (!(t < 0.0)) throw DomainError("fstar_value(rkl): t must be < 0");
      return -1.0 - std::log(-t);
    case GeneratorKind::GAN:
      if (!(t < 0.0)) throw DomainError("fstar_value(gan): t must be < 0");
      return -std::log1p(-std::exp(t));
    case GeneratorKind::PR:
      if (!(std::fabs(t) <= g.lambda)) throw DomainError("fstar_value(pr): |t| must be <= lambda");
      return t / g.lambda;
    case GeneratorKind::TotalVariation:
      throw UnsupportedError("fstar_value: total variation is supported in primal form only");
  }
  return 0.0;
}

/// grad f*(t): the likelihood ratio implied by a discriminator output t.
/// For GAN, t = log D with D = p / (p + p_hat).
inline double ratio_from_discriminator(const Generator& g, double t) {
  switch (g.kind) {
    case GeneratorKind::KL:
      return std::exp(t - 1.0);
    case GeneratorKind::ReverseKL:
      if (!(t < 0.0)) throw DomainError("ratio_from_discriminator(rkl): t must be < 0");
      return -1.0 / t;
    case GeneratorKind::GAN:
      if (!(t < 0.0)) throw DomainError("ratio_from_discriminator(gan): t must be < 0");
      return std::exp(t) / -std::expm1(t);
    case GeneratorKind::TotalVariation:
    case GeneratorKind::PR:
      throw UnsupportedError("ratio_from_discriminator: grad f* is constant for " + g.name());
  }
  return 0.0;
}

/// Closed-form optimal discriminator for a given likelihood ratio r = p / p_hat.
inline double t_opt_from_ratio(const Generator& g, double r) {
  if (!(r > 0.0)) throw DomainError("t_opt_from_ratio: r must be > 0");
  switch (g.kind) {
    case GeneratorKind::KL: return 1.0 + std::log(r);
    case GeneratorKind::ReverseKL: return -1.0 / r;
    case GeneratorKind::GAN: return -std::log1p(1.0 / r);
    case GeneratorKind::PR: return r > 1.0 ? g.lambda : (r < 1.0 ? -g.lambda : 0.0);
    case GeneratorKind::TotalVariation: return r > 1.0 ? 0.5 : (r < 1.0 ? -0.5 : 0.0);
  }
  return 0.0;
}

/// Exact sum_i q_i f(p_i / q_i).
inline DivergenceEstimate divergence_finite(const Generator& g, const FiniteDist& p,
                                            const FiniteDist& q) {
  require_absolutely_continuous(p, q);
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double term = perspective(g, p[i], q[i]);
    if (std::isinf(term)) return {term, 0.0, 0};
    s += term;
  }
  return {s.value(), 0.0, 0};
}

/// Monte Carlo estimate of E_{q}[f(ratio(x))] with its standard error.
/// `sampler(rng)` draws one point from the proposal.
template <class RatioFn, class Sampler>
DivergenceEstimate divergence_mc(const Generator& g, RatioFn&& ratio_fn, Sampler&& sampler,
                                 std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("divergence_mc: n must be >= 2");
  std::mt19937_64 rng(seed);
  RunningStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sampler(rng);
    const double r = ratio_fn(x);
    const double v = (r >= 0.0) ? f_value(g, r) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(v)) {
      throw EstimationError("divergence_mc: non-finite f value at ratio " + std::to_string(r), r);
    }
    stats.push(v);
  }
  return {stats.mean(), stats.stderr_of_mean(), n};
}

/// E_P[T] - E_P_hat[f*(T)] for a per-atom discriminator T. Never exceeds the
/// primal divergence (weak duality).
inline double dual_value(const Generator& g, std::span<const double> t, const FiniteDist& p,
                         const FiniteDist& q) {
  if (!g.smooth()) throw UnsupportedError("dual_value: generator " + g.name() + " is not smooth");
  require_same_support(p, q);
  if (t.size() != p.size()) throw SupportMismatch("dual_value: T has wrong length");
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * t[i];
    if (q[i] > 0.0) s += -q[i] * fstar_value(g, t[i]);
  }
  return s.value();
}

/// Dual value for a discriminator given as a function of the atom index.
template <class TFn>
  requires std::invocable<TFn, std::size_t>
double dual_value(const Generator& g, TFn&& t_fn, const FiniteDist& p, const FiniteDist& q) {
  std::vector<double> t(p.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = t_fn(i);
  return dual_value(g, std::span<const double>(t), p, q);
}

namespace detail {

// log sum_i p_i^beta q_i^(1-beta) for beta > 0, via log-sum-exp. Atoms where
// the term is identically zero are skipped. Returns +inf when a term is unbounded.
inline double log_renyi_sum(double beta, const FiniteDist& p, const FiniteDist& q) {
  std::vector<double> logs;
  logs.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    const double qi = q[i];
    if (pi == 0.0) continue;
    if (qi == 0.0) {
      if (beta > 1.0) return kInf;
      if (beta < 1.0) continue;
    }
    logs.push_back(beta * std::log(pi) + (1.0 - beta) * std::log(qi));
  }
  if (logs.empty()) return -kInf;
  const double mx = *std::max_element(logs.begin(), logs.end());
  CompensatedSum s;
  for (double l : logs) s += std::exp(l - mx);
  return mx + std::log(s.value());
}

}  // namespace detail

/// Renyi divergence of order beta in (0,1) or (1, inf).
inline double renyi_finite(double beta, const FiniteDist& p, const FiniteDist& q) {
  require_same_support(p, q);
  if (!(beta > 0.0) || beta == 1.0 || !std::isfinite(beta)) {
    throw DomainError("renyi_finite: beta must be in (0,1) or (1,inf); use KL for beta = 1");
  }
  if (beta > 1.0) require_absolutely_continuous(p, q);
  const double ls = detail::log_renyi_sum(beta, p, q);
  return ls / (beta - 1.0);
}

/// Renyi divergence extended to beta = 0 (-log q(supp p)) and beta = 1 (KL).
inline double renyi_extended(double beta, const FiniteDist& p, const FiniteDist& q) {
  if (beta == 1.0) return divergence_finite(Generator::kl(), p, q).value;
  if (beta == 0.0) {
    require_same_support(p, q);
    CompensatedSum s;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0.0) s += q[i];
    return -std::log(s.value());
  }
  return renyi_finite(beta, p, q);
}

struct MaxDivergence {
  double value = 0.0;     // log sup p/q
  std::size_t argmax = 0; // atom or grid index attaining the sup
};

/// log max_i p_i / q_i over atoms with p_i > 0.
inline MaxDivergence max_divergence(const FiniteDist& p, const FiniteDist& q) {
  require_same_support(p, q);
  MaxDivergence out{-kInf, 0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      throw AbsoluteContinuityError("max_divergence: P_hat does not dominate P at atom " +
                                        std::to_string(i),
                                    i);
    }
    const double v = std::log(p[i]) - std::log(q[i]);
    if (v > out.value) out = {v, i};
  }
  return out;
}

/// Grid supremum of log p(x)/q(x) for continuous densities.
template <class PDensity, class QDensity, class Point>
MaxDivergence max_divergence_grid(PDensity&& p, QDensity&& q, std::span<const Point> grid) {
  MaxDivergence out{-kInf, 0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double pi = p(grid[i]);
    if (pi == 0.0) continue;
    const double qi = q(grid[i]);
    if (qi == 0.0) {
      throw AbsoluteContinuityError("max_divergence_grid: q vanishes where p > 0 at grid index " +
                                        std::to_string(i),
                                    i);
    }
    const double v = std::log(pi) - std::log(qi);
    if (v > out.value) out = {v, i};
  }
  return out;
}

}  // namespace obrs
