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
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "obrs/finite_dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

/// Gaussian mixture with diagonal covariance in Dim dimensions.
template <std::size_t Dim>
class GaussianMixture {
  static_assert(Dim == 1 || Dim == 2, "only 1D and 2D mixtures are supported");

 public:
  using point_type = std::array<double, Dim>;
  static constexpr std::size_t dim = Dim;

  GaussianMixture() = default;
  GaussianMixture(std::vector<double> weights, std::vector<point_type> means,
                  std::vector<point_type> stds)
      : weights_(std::move(weights)), means_(std::move(means)), stds_(std::move(stds)) {
    validate();
    cumulative_.resize(weights_.size());
    CompensatedSum s;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      s += weights_[k];
      cumulative_[k] = s.value();
    }
    cumulative_.back() = 1.0;
  }

  /// Equal-weight isotropic mixture.
  static GaussianMixture isotropic(std::vector<point_type> means, double sigma) {
    const std::size_t k = means.size();
    point_type s;
    s.fill(sigma);
    return GaussianMixture(std::vector<double>(k, 1.0 / static_cast<double>(k)), std::move(means),
                           std::vector<point_type>(k, s));
  }

  [[nodiscard]] std::size_t components() const { return weights_.size(); }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] std::span<const point_type> means() const { return means_; }
  [[nodiscard]] std::span<const point_type> stds() const { return stds_; }

  [[nodiscard]] double density(const point_type& x) const {
    CompensatedSum s;
    for (std::size_t k = 0; k < weights_.size(); ++k) s += weights_[k] * component_density(k, x);
    return s.value();
  }

  [[nodiscard]] double density(double x) const
    requires(Dim == 1)
  {
    return density(point_type{x});
  }

  [[nodiscard]] double component_density(std::size_t k, const point_type& x) const {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    double v = 1.0;
    double e = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) {
      const double z = (x[d] - means_[k][d]) / stds_[k][d];
      e += z * z;
      v *= inv_sqrt_2pi / stds_[k][d];
    }
    return v * std::exp(-0.5 * e);
  }

  template <class Rng>
  point_type sample(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
    if (k >= weights_.size()) k = weights_.size() - 1;
    point_type x;
    for (std::size_t d = 0; d < Dim; ++d) {
      std::normal_distribution<double> n(means_[k][d], stds_[k][d]);
      x[d] = n(rng);
    }
    return x;
  }

  /// Per-dimension [min(mean - w*std), max(mean + w*std)] over components.
  [[nodiscard]] std::array<std::pair<double, double>, Dim> bounding_box(double width) const {
    std::array<std::pair<double, double>, Dim> box;
    for (std::size_t d = 0; d < Dim; ++d) box[d] = {kInf, -kInf};
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      for (std::size_t d = 0; d < Dim; ++d) {
        box[d].first = std::min(box[d].first, means_[k][d] - width * stds_[k][d]);
        box[d].second = std::max(box[d].second, means_[k][d] + width * stds_[k][d]);
      }
    }
    return box;
  }

  friend bool operator==(const GaussianMixture& a, const GaussianMixture& b) {
    return a.weights_ == b.weights_ && a.means_ == b.means_ && a.stds_ == b.stds_;
  }

 private:
  void validate() const {
    if (weights_.empty()) throw DomainError("GaussianMixture: no components");
    if (means_.size() != weights_.size() || stds_.size() != weights_.size()) {
      throw DomainError("GaussianMixture: weights, means and stds must have equal length");
    }
    CompensatedSum s;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("GaussianMixture: weights must be >= 0");
      s += w;
    }
    if (std::fabs(s.value() - 1.0) > 1e-12) throw DomainError("GaussianMixture: weights must sum to 1");
    for (const auto& sd : stds_)
      for (double v : sd)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("GaussianMixture: stds must be > 0");
    for (const auto& m : means_)
      for (double v : m)
        if (!std::isfinite(v)) throw DomainError("GaussianMixture: non-finite mean");
  }

  std::vector<double> weights_;
  std::vector<point_type> means_;
  std::vector<point_type> stds_;
  std::vector<double> cumulative_;
};

using Mixture1D = GaussianMixture<1>;
using Mixture2D = GaussianMixture<2>;

// ---------------------------------------------------------------------------
// Uniform entry points.

inline double density(const FiniteDist& d, std::size_t atom) { return d.density(atom); }

template <std::size_t Dim>
double density(const GaussianMixture<Dim>& d, const typename GaussianMixture<Dim>::point_type& x) {
  return d.density(x);
}

inline double density(const Mixture1D& d, double x) { return d.density(x); }

template <class Rng>
std::size_t sample_one(const FiniteDist& d, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] <= 0.0) continue;
    acc += d[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

template <std::size_t Dim, class Rng>
auto sample_one(const GaussianMixture<Dim>& d, Rng& rng) {
  return d.sample(rng);
}

template <class Dist, class Rng>
auto sample(const Dist& d, Rng& rng, std::size_t n) {
  using P = decltype(sample_one(d, rng));
  std::vector<P> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(d, rng));
  return out;
}

/// x -> p(x) / p_hat(x). Throws when the denominator vanishes.
template <class PDist, class QDist>
class LikelihoodRatio {
 public:
  LikelihoodRatio(PDist p, QDist q) : p_(std::move(p)), q_(std::move(q)) {}

  template <class X>
  double operator()(const X& x) const {
    const double qx = density(q_, x);
    if (!(qx > 0.0)) throw DomainError("likelihood ratio: proposal density is zero");
    return density(p_, x) / qx;
  }

  [[nodiscard]] const PDist& target() const { return p_; }
  [[nodiscard]] const QDist& proposal() const { return q_; }

 private:
  PDist p_;
  QDist q_;
};

template <class PDist, class QDist>
LikelihoodRatio<PDist, QDist> ratio(PDist p, QDist q) {
  return {std::move(p), std::move(q)};
}

/// Per-atom ratios p_i / q_i for finite supports.
inline std::vector<double> ratio_vector(const FiniteDist& p, const FiniteDist& q) {
  require_absolutely_continuous(p, q);
  std::vector<double> r(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = q[i] > 0.0 ? p[i] / q[i] : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Experiment families. Parameters the source figures leave open are
// artifact defaults and are recorded in run manifests.

struct Fig3Family {
  Mixture1D target;
  Mixture1D model;
};

inline constexpr double kFig3TargetSpacing = 1.0;
inline constexpr double kFig3TargetVariance = 0.3;
inline constexpr double kFig3ModelVariance = 0.4;

/// Ten equal-weight components centred at 0: target with spacing
/// `target_spacing` and variance 0.3, model with spacing theta and variance 0.4.
inline Fig3Family fig3_family(double theta, double target_spacing = kFig3TargetSpacing) {
  if (!(theta > 0.0)) throw DomainError("fig3_family: theta must be > 0");
  std::vector<Mixture1D::point_type> mp, mq;
  for (int i = 0; i < 10; ++i) {
    const double off = static_cast<double>(i) - 4.5;
    mp.push_back({off * target_spacing});
    mq.push_back({off * theta});
  }
  return {Mixture1D::isotropic(std::move(mp), std::sqrt(kFig3TargetVariance)),
          Mixture1D::isotropic(std::move(mq), std::sqrt(kFig3ModelVariance))};
}

inline constexpr double kFig4ModeOffset = 2.0;
inline constexpr double kFig4ModeStd = 0.5;

inline Mixture1D fig4_target() {
  return Mixture1D::isotropic({{-kFig4ModeOffset}, {kFig4ModeOffset}}, kFig4ModeStd);
}

inline Mixture1D fig4_model(double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("fig4_model: sigma must be > 0");
  return Mixture1D({1.0}, {{mu}}, {{sigma}});
}

/// 5x5 grid of isotropic 2D Gaussians with means {-2s, -s, 0, s, 2s}^2.
inline Mixture2D grid25(double sigma, double spacing) {
  if (!(sigma > 0.0) || !(spacing > 0.0)) throw DomainError("grid25: sigma and spacing must be > 0");
  std::vector<Mixture2D::point_type> means;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) means.push_back({i * spacing, j * spacing});
  return Mixture2D::isotropic(std::move(means), sigma);
}

/// Default 1D pair used for acceptance-function and PR-curve plots: a
/// bimodal target and a broader, mis-weighted proposal with heavier tails
/// (so the likelihood ratio stays bounded).
struct Pair1D {
  Mixture1D target;
  Mixture1D model;
};

inline Pair1D fig2_pair() {
  return {fig4_target(), Mixture1D({0.3, 0.7}, {{-1.5}, {1.5}}, {{0.8}, {1.0}})};
}

// ---------------------------------------------------------------------------
// Deterministic 1D quadrature.

struct QuadratureSpec {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t nodes = 4096;
};

inline constexpr std::size_t kMinQuadratureNodes = 4096;
inline constexpr double kQuadratureWidth = 8.0;

/// Union of mean +- 8 std over every component of the given mixtures.
inline QuadratureSpec quadrature_domain(std::initializer_list<const Mixture1D*> mixtures,
                                        std::size_t nodes = kMinQuadratureNodes) {
  QuadratureSpec spec{kInf, -kInf, nodes};
  for (const auto* m : mixtures) {
    const auto box = m->bounding_box(kQuadratureWidth);
    spec.lo = std::min(spec.lo, box[0].first);
    spec.hi = std::max(spec.hi, box[0].second);
  }
  return spec;
}

/// Composite trapezoid nodes and weights.
struct QuadratureRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline QuadratureRule trapezoid(const QuadratureSpec& spec) {
  if (spec.nodes < 2 || !(spec.hi > spec.lo)) throw DomainError("trapezoid: bad quadrature spec");
  QuadratureRule rule{linspace(spec.lo, spec.hi, spec.nodes), {}};
  const double h = (spec.hi - spec.lo) / static_cast<double>(spec.nodes - 1);
  rule.w.assign(spec.nodes, h);
  rule.w.front() = rule.w.back() = 0.5 * h;
  return rule;
}

template <class Fn>
double integrate(const QuadratureSpec& spec, Fn&& fn) {
  const auto rule = trapezoid(spec);
  CompensatedSum s;
  for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * fn(rule.x[i]);
  return s.value();
}

/// Two densities discretised on a common node set: p_i, q_i are the
/// (renormalised) masses w_i p(x_i), w_i q(x_i).
struct DiscretizedPair {
  std::vector<double> x;
  FiniteDist p;
  FiniteDist q;
  QuadratureSpec spec;
};

inline DiscretizedPair discretize(const Mixture1D& p, const Mixture1D& q, const QuadratureSpec& spec) {
  const auto rule = trapezoid(spec);
  std::vector<double> pm(rule.x.size()), qm(rule.x.size());
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    pm[i] = rule.w[i] * p.density(rule.x[i]);
    qm[i] = rule.w[i] * q.density(rule.x[i]);
  }
  return {rule.x, FiniteDist::normalized(std::move(pm)), FiniteDist::normalized(std::move(qm)), spec};
}

inline DiscretizedPair discretize(const Mixture1D& p, const Mixture1D& q,
                                  std::size_t nodes = kMinQuadratureNodes) {
  return discretize(p, q, quadrature_domain({&p, &q}, nodes));
}

}  // namespace obrs
