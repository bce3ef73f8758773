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
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace obrs {

// Error hierarchy. Everything derives from std::runtime_error or
// std::domain_error so callers can catch broadly.

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SupportMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AbsoluteContinuityError : std::domain_error {
  std::size_t atom;
  AbsoluteContinuityError(const std::string& what, std::size_t atom_index)
      : std::domain_error(what), atom(atom_index) {}
};

struct ConvergenceError : std::runtime_error {
  double lo;
  double hi;
  ConvergenceError(const std::string& what, double bracket_lo, double bracket_hi)
      : std::runtime_error(what), lo(bracket_lo), hi(bracket_hi) {}
};

struct EstimationError : std::runtime_error {
  double offending_ratio;
  EstimationError(const std::string& what, double ratio)
      : std::runtime_error(what), offending_ratio(ratio) {}
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier compensated summation in extended precision.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(long double x) {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const { return static_cast<double>(sum_ + comp_); }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

template <class Range, class Fn>
double compensated_sum(const Range& r, Fn&& fn) {
  CompensatedSum s;
  for (const auto& x : r) s += fn(x);
  return s.value();
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > 0.0)) throw DomainError("logspace: bounds must be positive");
  auto v = linspace(std::log(lo), std::log(hi), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

/// Running mean / variance (Welford).
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  [[nodiscard]] std::size_t count() const { return n_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  [[nodiscard]] double stddev() const { return std::sqrt(variance()); }
  [[nodiscard]] double stderr_of_mean() const {
    return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Result of a scalar bisection.
struct BisectionResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double lo = 0.0;
  double hi = 0.0;
  bool converged = false;
};

/// Bisection on a nondecreasing function g over [lo, hi], looking for
/// g(x) = target within eps. Midpoints are taken in log space when
/// `geometric` is set (both endpoints must then be positive). Stops early
/// once the bracket stops shrinking; `converged` reports whether eps was met.
template <class Fn>
BisectionResult bisect_increasing(Fn&& g, double target, double lo, double hi, double eps,
                                  int max_iter, bool geometric) {
  BisectionResult res;
  res.lo = lo;
  res.hi = hi;
  for (int it = 1; it <= max_iter; ++it) {
    const double mid = geometric ? std::sqrt(res.lo) * std::sqrt(res.hi) : 0.5 * (res.lo + res.hi);
    const double r = g(mid) - target;
    res.x = mid;
    res.residual = r;
    res.iterations = it;
    if (std::fabs(r) <= eps) {
      res.converged = true;
      return res;
    }
    if (mid <= res.lo || mid >= res.hi) break;  // bracket exhausted in floating point
    if (r > 0.0) {
      res.hi = mid;
    } else {
      res.lo = mid;
    }
  }
  return res;
}

}  // namespace obrs
