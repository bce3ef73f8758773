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

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "obrs/acceptance.hpp"
#include "obrs/dist.hpp"
#include "obrs/numeric.hpp"

namespace obrs {

// 25 Gaussians on a 5x5 grid sampled through an analytic surrogate proposal.
// Baseline draws straight from the surrogate; OBRS and DRS reject with the
// exact likelihood ratio at a matched acceptance rate.

struct Gaussians25Config {
  double target_rate = 0.4;
  std::size_t n_samples = 2500;
  std::size_t repeats = 50;
  std::uint64_t seed = 0;
  double target_sigma = 0.05;
  double spacing = 1.0;
  double surrogate_sigma = 0.15;
  double jitter_concentration = 100.0;  // gamma shape; weight CV = 1/sqrt(shape)
  std::size_t calibration_n = 100000;
  double quality_radius = 4.0;  // in target stds
};

struct Gaussians25Row {
  std::string method;
  std::size_t repeat = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t proposals_used = 0;
  std::size_t ratio_evals = 0;
  double measured_rate = 1.0;
  double c_K = 1.0;
  double M = 1.0;
  double gamma = 0.0;
};

struct Gaussians25Summary {
  std::string method;
  double precision_mean = 0.0;
  double precision_std = 0.0;
  double recall_mean = 0.0;
  double recall_std = 0.0;
  double proposals_per_sample = 0.0;
  double wall_time_s = 0.0;
};

struct Gaussians25Report {
  Gaussians25Config config;
  std::vector<double> surrogate_weights;
  std::vector<Gaussians25Row> rows;
  std::vector<Gaussians25Summary> summary;  // baseline, obrs, drs

  [[nodiscard]] const Gaussians25Summary& method(const std::string& m) const {
    for (const auto& s : summary)
      if (s.method == m) return s;
    throw DomainError("gaussians25: unknown method " + m);
  }
};

/// Surrogate proposal: the target grid with wider components and weights
/// multiplied by seeded Gamma(shape) / shape factors.
inline Mixture2D gaussians25_surrogate(const Gaussians25Config& c) {
  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ull);
  std::gamma_distribution<double> g(c.jitter_concentration, 1.0 / c.jitter_concentration);
  const auto base = grid25(c.surrogate_sigma, c.spacing);
  std::vector<double> w(base.weights().begin(), base.weights().end());
  double total = 0.0;
  for (auto& v : w) total += (v *= g(rng));
  for (auto& v : w) v /= total;
  return Mixture2D(std::move(w), {base.means().begin(), base.means().end()},
                   {base.stds().begin(), base.stds().end()});
}

namespace detail {

struct ModeScore {
  double precision = 0.0;
  double recall = 0.0;
};

// Precision: share of samples within the quality radius of the nearest mode.
// Recall: share of modes with at least n / 250 such samples.
inline ModeScore score_modes(const std::vector<Mixture2D::point_type>& xs, const Mixture2D& target,
                             double radius) {
  const auto& means = target.means();
  std::vector<std::size_t> hits(means.size(), 0);
  std::size_t good = 0;
  for (const auto& x : xs) {
    std::size_t best = 0;
    double best_d2 = kInf;
    for (std::size_t k = 0; k < means.size(); ++k) {
      const double dx = x[0] - means[k][0], dy = x[1] - means[k][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = k;
      }
    }
    if (best_d2 <= radius * radius) {
      ++good;
      ++hits[best];
    }
  }
  const double need = static_cast<double>(xs.size()) / (static_cast<double>(means.size()) * 10.0);
  std::size_t covered = 0;
  for (auto h : hits) covered += static_cast<double>(h) >= need;
  return {xs.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(xs.size()),
          static_cast<double>(covered) / static_cast<double>(means.size())};
}

}  // namespace detail

/// Runs baseline, OBRS and DRS for every repeat. Per repeat a fixed
/// calibration set gives M, c_K and gamma; OBRS and DRS then share the
/// sampling stream so their difference reflects only the acceptance rule.
template <class Clock>
Gaussians25Report gaussians25(const Gaussians25Config& c) {
  if (!(c.target_rate > 0.0) || c.target_rate > 1.0) throw DomainError("gaussians25: rate must be in (0,1]");
  if (c.n_samples == 0 || c.repeats == 0) throw DomainError("gaussians25: n and repeats must be >= 1");
  const auto target = grid25(c.target_sigma, c.spacing);
  const auto proposal = gaussians25_surrogate(c);
  const auto lr = ratio(target, proposal);
  const double radius = c.quality_radius * c.target_sigma;
  const double K = 1.0 / c.target_rate;

  Gaussians25Report rep;
  rep.config = c;
  rep.surrogate_weights.assign(proposal.weights().begin(), proposal.weights().end());
  double t_base = 0.0, t_obrs = 0.0, t_drs = 0.0;

  std::seed_seq root{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32)};
  std::vector<std::uint64_t> seeds(2 * c.repeats);
  {
    std::vector<std::uint32_t> raw(seeds.size() * 2);
    root.generate(raw.begin(), raw.end());
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = (std::uint64_t(raw[2 * i]) << 32) | raw[2 * i + 1];
  }

  for (std::size_t rpt = 0; rpt < c.repeats; ++rpt) {
    const std::uint64_t calib_seed = seeds[2 * rpt], run_seed = seeds[2 * rpt + 1];
    const auto table = ProposalTable::from_samples(lr, proposal, c.calibration_n, calib_seed);
    const double M = table.max_ratio();
    const auto ck = solve_c_K(table, K, M, kSampleEps);
    const auto drs = drs_gamma_for_rate(table, M, c.target_rate, kSampleEps);
    const std::size_t max_draws = 1000 * c.n_samples;
    auto sampler = [&](std::mt19937_64& g) { return proposal.sample(g); };

    {
      const auto t0 = Clock::now();
      std::mt19937_64 rng(run_seed);
      std::vector<Mixture2D::point_type> xs;
      xs.reserve(c.n_samples);
      for (std::size_t i = 0; i < c.n_samples; ++i) xs.push_back(sampler(rng));
      const auto s = detail::score_modes(xs, target, radius);
      rep.rows.push_back({"baseline", rpt, s.precision, s.recall, c.n_samples, 0, 1.0, 1.0, M, 0.0});
      t_base += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    auto rejection = [&](const AcceptanceSpec& spec, const char* name, double& timer) {
      const auto t0 = Clock::now();
      std::mt19937_64 rng(run_seed);
      const auto run = rejection_sample(sampler, bind(spec, lr), c.n_samples, rng, max_draws);
      const auto s = detail::score_modes(run.samples, target, radius);
      rep.rows.push_back({name, rpt, s.precision, s.recall, run.draws_used, run.ratio_evals, run.measured_rate(),
                          spec.c_K, M, spec.gamma});
      timer += std::chrono::duration<double>(Clock::now() - t0).count();
    };
    rejection(ck.spec(K), "obrs", t_obrs);
    rejection(drs.spec(M), "drs", t_drs);
  }

  const std::pair<const char*, double> methods[] = {{"baseline", t_base}, {"obrs", t_obrs}, {"drs", t_drs}};
  for (const auto& [name, secs] : methods) {
    RunningStats prec, rec;
    double proposals = 0.0;
    for (const auto& r : rep.rows) {
      if (r.method != name) continue;
      prec.push(r.precision);
      rec.push(r.recall);
      proposals += static_cast<double>(r.proposals_used);
    }
    rep.summary.push_back({name, prec.mean(), prec.stddev(), rec.mean(), rec.stddev(),
                           proposals / static_cast<double>(c.n_samples * c.repeats), secs});
  }
  return rep;
}

inline Gaussians25Report gaussians25(const Gaussians25Config& c) {
  return gaussians25<std::chrono::steady_clock>(c);
}

}  // namespace obrs
