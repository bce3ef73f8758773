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

// CSV and JSON serialisation for distributions, acceptance specs, PR
// curves and run manifests.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "obrs/acceptance.hpp"
#include "obrs/dist.hpp"
#include "obrs/finite_dist.hpp"
#include "obrs/prcurve.hpp"

namespace obrs {

inline constexpr const char* kVersion = "obrs 0.1.0";

/// Shortest round-trippable form with 17 significant digits.
inline std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal CSV writer: UTF-8, comma-separated, '.' decimal separator.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& header(std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
      if (!first) os_ << ',';
      os_ << c;
      first = false;
    }
    os_ << '\n';
    return *this;
  }

  template <class... Ts>
  CsvWriter& row(const Ts&... cells) {
    bool first = true;
    ((emit(cells, first)), ...);
    os_ << '\n';
    return *this;
  }

 private:
  void sep(bool& first) {
    if (!first) os_ << ',';
    first = false;
  }
  void emit(double v, bool& first) {
    sep(first);
    os_ << fmt_real(v);
  }
  void emit(const std::string& s, bool& first) {
    sep(first);
    os_ << s;
  }
  void emit(const char* s, bool& first) {
    sep(first);
    os_ << s;
  }
  template <class I>
    requires std::is_integral_v<I>
  void emit(I v, bool& first) {
    sep(first);
    os_ << v;
  }

  std::ostream& os_;
};

inline void write_pr_csv(std::ostream& os, const PRCurve& c) {
  CsvWriter w(os);
  w.header({"lambda", "alpha", "beta", "mode", "stderr_alpha", "stderr_beta"});
  for (const auto& p : c.points) w.row(p.lambda, p.alpha, p.beta, to_string(c.mode), p.stderr_alpha, p.stderr_beta);
}

// ---------------------------------------------------------------------------
// Distributions: {type, weights, means, stds}.

using AnyDist = std::variant<FiniteDist, Mixture1D, Mixture2D>;

inline nlohmann::json to_json_value(const FiniteDist& d) {
  return {{"type", "finite"}, {"weights", std::vector<double>(d.probs().begin(), d.probs().end())}};
}

template <std::size_t Dim>
nlohmann::json to_json_value(const GaussianMixture<Dim>& m) {
  nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
  for (const auto& mu : m.means()) means.push_back(std::vector<double>(mu.begin(), mu.end()));
  for (const auto& sd : m.stds()) stds.push_back(std::vector<double>(sd.begin(), sd.end()));
  return {{"type", "gmm"},
          {"dim", Dim},
          {"weights", std::vector<double>(m.weights().begin(), m.weights().end())},
          {"means", means},
          {"stds", stds}};
}

inline nlohmann::json to_json_value(const AnyDist& d) {
  return std::visit([](const auto& x) { return to_json_value(x); }, d);
}

namespace detail {

template <std::size_t Dim>
std::array<double, Dim> read_vec(const nlohmann::json& j, bool allow_scalar) {
  std::array<double, Dim> v{};
  if (j.is_number()) {
    if (!allow_scalar && Dim != 1) throw DomainError("expected a " + std::to_string(Dim) + "-vector");
    v.fill(j.get<double>());
    return v;
  }
  if (!j.is_array() || j.size() != Dim) throw DomainError("expected a " + std::to_string(Dim) + "-vector");
  for (std::size_t d = 0; d < Dim; ++d) v[d] = j[d].get<double>();
  return v;
}

template <std::size_t Dim>
GaussianMixture<Dim> read_gmm(const nlohmann::json& j) {
  const auto w = j.at("weights").get<std::vector<double>>();
  std::vector<std::array<double, Dim>> means, stds;
  for (const auto& m : j.at("means")) means.push_back(read_vec<Dim>(m, false));
  for (const auto& s : j.at("stds")) stds.push_back(read_vec<Dim>(s, true));
  return GaussianMixture<Dim>(w, means, stds);
}

}  // namespace detail

inline AnyDist dist_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "finite") return FiniteDist(j.at("weights").get<std::vector<double>>());
  if (type == "gmm") {
    const int dim = j.value("dim", 1);
    if (dim == 1) return detail::read_gmm<1>(j);
    if (dim == 2) return detail::read_gmm<2>(j);
    throw DomainError("gmm: dim must be 1 or 2");
  }
  throw DomainError("unknown distribution type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Acceptance specs: {kind, K, c_K, M, gamma}.

inline nlohmann::json to_json_value(const AcceptanceSpec& s) {
  return {{"kind", to_string(s.kind)}, {"K", s.K}, {"c_K", s.c_K}, {"M", s.M}, {"gamma", s.gamma}};
}

inline AcceptanceSpec acceptance_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "unit") return AcceptanceSpec::unit();
  if (kind == "unbudgeted") return AcceptanceSpec::unbudgeted(j.at("M").get<double>());
  if (kind == "obrs") {
    return AcceptanceSpec::obrs(j.at("K").get<double>(), j.at("c_K").get<double>(), j.at("M").get<double>());
  }
  if (kind == "drs") return AcceptanceSpec::drs(j.at("gamma").get<double>(), j.at("M").get<double>());
  throw DomainError("unknown acceptance kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Run manifests.

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
  nlohmann::json results = nlohmann::json::object();
};

inline nlohmann::json to_json_value(const RunManifest& m) {
  return {{"command", m.command}, {"config", m.config},   {"seed", m.seed},
          {"version", m.version}, {"outputs", m.outputs}, {"wall_time_s", m.wall_time_s},
          {"results", m.results}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  if (j.contains("results")) m.results = j.at("results");
  return m;
}

}  // namespace obrs
