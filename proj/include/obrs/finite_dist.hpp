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
#include <utility>
#include <vector>

#include "obrs/numeric.hpp"

namespace obrs {

/// Probability mass function over atoms 0..n-1.
class FiniteDist {
 public:
  static constexpr double kSumTolerance = 1e-12;

  FiniteDist() = default;
  explicit FiniteDist(std::vector<double> probs) : probs_(std::move(probs)) { validate(); }
  FiniteDist(std::initializer_list<double> probs) : probs_(probs) { validate(); }

  /// Rescales nonnegative masses to sum to one.
  static FiniteDist normalized(std::vector<double> masses) {
    CompensatedSum s;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("FiniteDist: negative or non-finite mass");
      s += m;
    }
    const double z = s.value();
    if (!(z > 0.0)) throw DomainError("FiniteDist: total mass is zero");
    for (auto& m : masses) m /= z;
    FiniteDist d;
    d.probs_ = std::move(masses);
    return d;
  }

  [[nodiscard]] std::size_t size() const { return probs_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }
  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] double density(std::size_t atom) const {
    if (atom >= probs_.size()) throw DomainError("FiniteDist: atom out of range");
    return probs_[atom];
  }

  friend bool operator==(const FiniteDist&, const FiniteDist&) = default;

 private:
  void validate() const {
    if (probs_.empty()) throw DomainError("FiniteDist: empty support");
    CompensatedSum s;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("FiniteDist: probabilities must be finite and >= 0");
      s += p;
    }
    if (std::fabs(s.value() - 1.0) > kSumTolerance) {
      throw DomainError("FiniteDist: probabilities sum to " + std::to_string(s.value()));
    }
  }

  std::vector<double> probs_;
};

inline void require_same_support(const FiniteDist& p, const FiniteDist& q) {
  if (p.size() != q.size()) {
    throw SupportMismatch("support mismatch: " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + " atoms");
  }
}

/// Throws AbsoluteContinuityError at the first atom with q_i = 0 < p_i.
inline void require_absolutely_continuous(const FiniteDist& p, const FiniteDist& q) {
  require_same_support(p, q);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0 && p[i] > 0.0) {
      throw AbsoluteContinuityError("P is not absolutely continuous w.r.t. P_hat at atom " +
                                        std::to_string(i),
                                    i);
    }
  }
}

}  // namespace obrs
