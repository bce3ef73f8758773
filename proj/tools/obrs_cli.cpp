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


// obrs_cli: experiment runner for budgeted rejection sampling. Every command
// writes CSV files plus a manifest.json into --out; `rerun` replays a
// manifest's resolved config.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "obrs/obrs.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace obrs;

namespace {

constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output sink for one command run.
struct Run {
  fs::path out;
  std::vector<std::string> outputs;
  std::vector<std::string> failures;
  json results = json::object();

  std::ofstream open(const std::string& name) {
    fs::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    outputs.push_back(name);
    return f;
  }

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

json load_json_arg(const std::string& s) {
  if (!s.empty() && s.front() == '{') return json::parse(s);
  std::ifstream f(s);
  if (!f) throw UsageError("cannot read " + s);
  return json::parse(f);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UsageError("bad number '" + tok + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

double budget_from(const json& cfg) {
  if (cfg.contains("budget") && !cfg["budget"].is_null()) return cfg["budget"].get<double>();
  if (cfg.contains("rate") && !cfg["rate"].is_null()) {
    const double r = cfg["rate"].get<double>();
    if (!(r > 0.0) || r > 1.0) throw UsageError("--rate must be in (0,1]");
    return 1.0 / r;
  }
  return 2.0;
}

std::uint64_t seed_of(const json& cfg) {
  if (!cfg.contains("seed") || cfg["seed"].is_null()) throw UsageError("--seed is required for this command");
  return cfg["seed"].get<std::uint64_t>();
}

void write_pr(Run& run, const std::string& name, const PRCurve& c) {
  auto f = run.open(name);
  write_pr_csv(f, c);
}

// ---------------------------------------------------------------------------
// table1: generator values, conjugates and the ratio <-> discriminator map.

void cmd_table1(const json& cfg, Run& run) {
  const auto us = logspace(cfg.at("u_min").get<double>(), cfg.at("u_max").get<double>(), cfg.at("n").get<std::size_t>());
  const std::vector<Generator> gens{Generator::kl(), Generator::reverse_kl(), Generator::tv(), Generator::gan(),
                                    Generator::pr(cfg.at("pr_lambda").get<double>())};
  auto f = run.open("table1.csv");
  CsvWriter w(f);
  w.header({"generator", "u", "f", "f_at_1", "t_opt", "fstar_t_opt", "fenchel_young_gap", "ratio_roundtrip",
            "roundtrip_residual", "dual"});
  json worst = json::object();
  for (const auto& g : gens) {
    double max_res = 0.0;
    for (double u : us) {
      const double fu = f_value(g, u);
      if (!g.smooth()) {
        w.row(g.name(), u, fu, f_offset(g), std::nan(""), std::nan(""), std::nan(""), std::nan(""), std::nan(""),
              "unsupported");
        continue;
      }
      const double t = t_opt_from_ratio(g, u);
      const double fs = fstar_value(g, t);
      const double back = ratio_from_discriminator(g, t);
      const double res = std::fabs(back - u) / u;
      max_res = std::max(max_res, res);
      w.row(g.name(), u, fu, f_offset(g), t, fs, std::fabs(t * u - fu - fs), back, res, "supported");
    }
    if (g.smooth()) worst[g.name()] = max_res;
  }
  run.results["max_roundtrip_residual"] = worst;
  run.results["gan_f_at_1"] = f_offset(Generator::gan());
  for (const char* g : {"kl", "gan"})
    run.check(worst[g].get<double>() <= 1e-12, std::string("roundtrip residual above 1e-12 for ") + g);
}

// ---------------------------------------------------------------------------
// fig2: densities, acceptance functions and PR curves for a 1D pair.

Pair1D pair_from(const json& cfg) {
  Pair1D pair = fig2_pair();
  if (cfg.contains("target")) pair.target = std::get<Mixture1D>(dist_from_json(cfg["target"]));
  if (cfg.contains("proposal")) pair.model = std::get<Mixture1D>(dist_from_json(cfg["proposal"]));
  return pair;
}

void cmd_fig2(const json& cfg, Run& run) {
  const auto pair = pair_from(cfg);
  const double K = budget_from(cfg);
  const auto nodes = std::max(cfg.at("nodes").get<std::size_t>(), kMinQuadratureNodes);
  const auto gen = Generator::parse(cfg.at("gen").get<std::string>());
  const auto d = discretize(pair.target, pair.model, nodes);
  const auto table = ProposalTable::from_finite(d.p, d.q);
  const double M = table.max_ratio();
  const auto ck = solve_c_K(table, K, M, kExactEps);
  const double tau = ck.tau();
  const double rate = ck.degenerate ? 1.0 : table.rate(tau);
  const auto drs = drs_gamma_for_rate(table, M, rate, kExactEps);
  const auto a_obrs = ck.spec(K), a_drs = drs.spec(M), a_unb = AcceptanceSpec::unbudgeted(M);

  std::vector<double> t_obrs(d.x.size()), t_drs(d.x.size()), t_unb(d.x.size());
  {
    auto fd = run.open("fig2_densities.csv");
    auto fa = run.open("fig2_acceptance.csv");
    CsvWriter wd(fd), wa(fa);
    wd.header({"x", "p", "p_hat", "p_tilde_obrs", "p_tilde_drs", "p_tilde_unbudgeted"});
    wa.header({"x", "r", "a_unbudgeted", "a_obrs", "a_drs"});
    const double z_unb = table.rate(1.0 / M);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      const double x = d.x[i];
      const double px = pair.target.density(x), qx = pair.model.density(x);
      const double r = qx > 0.0 ? px / qx : 0.0;
      const double ao = a_obrs(r), ad = a_drs(r), au = a_unb(r);
      wd.row(x, px, qx, qx * ao / rate, qx * ad / drs.rate, qx * au / z_unb);
      wa.row(x, r, au, ao, ad);
      t_obrs[i] = d.q[i] * ao;
      t_drs[i] = d.q[i] * ad;
    }
  }

  const auto grid = default_lambda_grid(tau);
  auto base = pr_curve(d.p, d.q, grid, PRMode::Quadrature);
  write_pr(run, "fig2_pr_base.csv", base);
  const auto drs_dist = FiniteDist::normalized(t_drs);
  auto drs_curve = pr_curve(d.p, drs_dist, detail::scaled(grid, K), PRMode::Quadrature);
  drs_curve.n = base.n = d.spec.nodes;
  write_pr(run, "fig2_pr_drs.csv", drs_curve);

  run.results["M"] = M;
  run.results["K"] = K;
  run.results["c_K"] = ck.c_K;
  run.results["measured_rate_obrs"] = rate;
  run.results["measured_rate_drs"] = drs.rate;
  run.results["gamma_drs"] = drs.gamma;
  run.results["quadrature"] = {{"lo", d.spec.lo}, {"hi", d.spec.hi}, {"nodes", d.spec.nodes}};
  const auto obrs_dist = FiniteDist::normalized(t_obrs);
  run.results["divergence"] = {{"generator", gen.name()},
                               {"base", divergence_finite(gen, d.p, d.q).value},
                               {"obrs", divergence_finite(gen, d.p, obrs_dist).value},
                               {"drs", divergence_finite(gen, d.p, drs_dist).value}};
  if (K <= 1.0 / (1.0 - 1e-12) || K >= M) {
    run.results["theorem3"] = "skipped: requires 1 < K < M";
  } else {
    const auto rep = verify_theorem3(pair.target, pair.model, K, grid, nodes);
    write_pr(run, "fig2_pr_obrs.csv", rep.refined);
    write_pr(run, "fig2_pr_obrs_predicted.csv", rep.predicted);
    run.results["theorem3"] = {{"max_dalpha", rep.max_dalpha},
                               {"max_dbeta", rep.max_dbeta},
                               {"max_identity_residual", rep.max_identity_residual}};
    run.check(rep.max_deviation() <= 1e-4, "refined PR curve deviates from the predicted transform by more than 1e-4");
    double worst_gain = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid[i] <= tau) worst_gain = std::min(worst_gain, rep.refined.points[i].alpha - base.points[i].alpha);
    run.results["min_precision_gain"] = worst_gain;
    run.check(worst_gain >= -1e-6, "refined precision below base precision at matched recall");
  }
  if (cfg.contains("budget") && !cfg["budget"].is_null() && K <= M)
    run.check(std::fabs(rate - 1.0 / K) <= 1e-3, "measured OBRS rate differs from 1/K by more than 1e-3");
}

// ---------------------------------------------------------------------------
// landscape / fit.

void cmd_landscape(const json& cfg, Run& run) {
  const auto gen = Generator::parse(cfg.at("gen").get<std::string>());
  const auto thetas =
      linspace(cfg.at("theta_min").get<double>(), cfg.at("theta_max").get<double>(), cfg.at("theta_n").get<std::size_t>());
  const auto budgets = cfg.at("budgets").get<std::vector<double>>();
  const auto s = landscape_1d(thetas, budgets, gen, cfg.at("nodes").get<std::size_t>(),
                              cfg.at("target_spacing").get<double>());
  auto f = run.open("landscape.csv");
  CsvWriter w(f);
  w.header({"theta", "K", "loss"});
  for (std::size_t i = 0; i < thetas.size(); ++i)
    for (std::size_t k = 0; k < budgets.size(); ++k) w.row(thetas[i], budgets[k], s.losses[i][k]);

  json minima = json::array();
  double worst = -kInf;
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    const auto col = s.column(k);
    minima.push_back({{"K", budgets[k]}, {"local_minima", local_minima_count(col)}});
  }
  std::vector<std::size_t> order(budgets.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return budgets[a] < budgets[b]; });
  for (const auto& row : s.losses)
    for (std::size_t k = 1; k < order.size(); ++k) worst = std::max(worst, row[order[k]] - row[order[k - 1]]);
  run.results["local_minima"] = minima;
  run.results["max_monotonicity_violation"] = order.size() > 1 ? worst : 0.0;
  run.results["quadrature_nodes"] = s.nodes;
  run.check(order.size() < 2 || worst <= 1e-8, "loss increases with the budget by more than 1e-8");
}

void cmd_fit(const json& cfg, Run& run) {
  const auto gen = Generator::parse(cfg.at("gen").get<std::string>());
  const auto mus = linspace(cfg.at("mu_min").get<double>(), cfg.at("mu_max").get<double>(), cfg.at("mu_n").get<std::size_t>());
  const auto sigmas =
      linspace(cfg.at("sigma_min").get<double>(), cfg.at("sigma_max").get<double>(), cfg.at("sigma_n").get<std::size_t>());
  const auto budgets = cfg.at("budgets").get<std::vector<double>>();
  const auto nodes = cfg.at("nodes").get<std::size_t>();
  const auto p = std::get<Mixture1D>(dist_from_json(cfg.at("target")));

  std::vector<FitResult> fits;
  for (double K : budgets) fits.push_back(fit_grid(gen, p, mus, sigmas, K, nodes));
  auto f = run.open("fit.csv");
  CsvWriter w(f);
  w.header({"mu", "sigma", "K", "loss"});
  for (const auto& fr : fits)
    for (std::size_t i = 0; i < mus.size(); ++i)
      for (std::size_t j = 0; j < sigmas.size(); ++j) w.row(mus[i], sigmas[j], fr.K, fr.loss_at(i, j));

  // cross[i][j]: loss under budget j of the argmin found for budget i
  json best = json::array(), cross = json::array();
  for (const auto& fr : fits) {
    best.push_back({{"K", fr.K}, {"mu", fr.best_mu}, {"sigma", fr.best_sigma}, {"loss", fr.best_loss}});
    json row = json::array();
    for (double K : budgets) row.push_back(twobrs_loss(gen, p, fig4_model(fr.best_mu, fr.best_sigma), K, nodes).loss);
    cross.push_back(row);
  }
  run.results["argmin"] = best;
  run.results["cross_loss"] = cross;
}

// ---------------------------------------------------------------------------
// bounds: improvement bounds over random finite instances.

void cmd_bounds(const json& cfg, Run& run) {
  const std::uint64_t seed = seed_of(cfg);
  const auto n_inst = cfg.at("instances").get<std::size_t>();
  const auto max_atoms = cfg.at("max_atoms").get<std::size_t>();
  if (n_inst == 0) throw UsageError("--instances must be >= 1");
  if (max_atoms < 2) throw UsageError("--max-atoms must be >= 2");
  const std::vector<Generator> gens{Generator::kl(), Generator::reverse_kl(), Generator::tv(), Generator::gan(),
                                    Generator::pr(2.0)};
  json rows = json::array();
  std::size_t general_bad = 0, witness_bad = 0, kl_bad = 0, kl_limit = 0;
  auto add = [&](const json& inst, const std::string& gen, const char* bound, double K, double M,
                 const oracle::BoundReport& r) {
    rows.push_back({{"instance_seed", inst}, {"generator", gen}, {"bound", bound}, {"K", K}, {"M", M},
                    {"lhs", r.lhs}, {"rhs", r.rhs}, {"satisfied", r.satisfied}, {"slack", r.slack},
                    {"witness_feasible", r.witness_feasible}, {"limit_case", r.limit_case}});
  };

  const FiniteDist p2{0.5, 0.5}, q2{0.8, 0.2};
  for (double K : {1.0, 2.0}) {
    for (const auto& g : gens) add(nullptr, g.name(), "general", K, 2.5, oracle::bound_check_general(g, p2, q2, K));
    add(nullptr, "kl", "kl_renyi", K, 2.5, oracle::bound_check_kl(p2, q2, K));
  }
  const auto canon = oracle::bound_check_kl(p2, q2, 2.0);
  run.results["two_point_kl_renyi"] = {{"lhs", canon.lhs}, {"rhs", canon.rhs}, {"violated", !canon.satisfied},
                                       {"witness_atom", canon.witness ? json(*canon.witness) : json(nullptr)}};

  std::mt19937_64 meta(seed);
  std::uniform_int_distribution<std::size_t> atoms(2, max_atoms);
  for (std::size_t i = 0; i < n_inst; ++i) {
    const std::uint64_t s = meta();
    const auto ins = oracle::random_instance(atoms(meta), s);
    for (const auto& g : gens) {
      const auto r = oracle::bound_check_general(g, ins.p, ins.q, ins.K);
      general_bad += !r.satisfied;
      witness_bad += !r.witness_feasible;
      add(s, g.name(), "general", ins.K, ins.M, r);
    }
    const auto r = oracle::bound_check_kl(ins.p, ins.q, ins.K);
    kl_bad += !r.satisfied;
    kl_limit += r.limit_case;
    add(s, "kl", "kl_renyi", ins.K, ins.M, r);
  }
  {
    auto f = run.open("bounds.json");
    f << rows.dump(1) << '\n';
  }
  run.results["instances"] = n_inst;
  run.results["general_violations"] = general_bad;
  run.results["witness_infeasible"] = witness_bad;
  run.results["kl_renyi_violations"] = kl_bad;
  run.results["kl_renyi_violation_rate"] = static_cast<double>(kl_bad) / static_cast<double>(n_inst);
  run.results["kl_renyi_limit_cases"] = kl_limit;
  run.check(general_bad == 0, "general improvement bound violated");
  run.check(witness_bad == 0, "mixture witness infeasible");
}

// ---------------------------------------------------------------------------
// gaussians25.

void cmd_gaussians25(const json& cfg, Run& run) {
  Gaussians25Config c;
  c.seed = seed_of(cfg);
  c.target_rate = cfg.at("rate").get<double>();
  c.n_samples = cfg.at("n").get<std::size_t>();
  c.repeats = cfg.at("repeats").get<std::size_t>();
  c.surrogate_sigma = cfg.at("surrogate_sigma").get<double>();
  c.jitter_concentration = cfg.at("jitter_concentration").get<double>();
  c.calibration_n = cfg.at("calibration_n").get<std::size_t>();
  if (!(c.target_rate > 0.0) || c.target_rate > 1.0) throw UsageError("--rate must be in (0,1]");
  const auto rep = gaussians25(c);
  {
    auto f = run.open("gaussians25.csv");
    CsvWriter w(f);
    w.header({"method", "repeat", "precision", "recall", "proposals_used", "ratio_evals", "measured_rate", "c_K",
              "M", "gamma"});
    for (const auto& r : rep.rows)
      w.row(r.method, r.repeat, r.precision, r.recall, r.proposals_used, r.ratio_evals, r.measured_rate, r.c_K, r.M,
            r.gamma);
  }
  {
    auto f = run.open("gaussians25_summary.csv");
    CsvWriter w(f);
    w.header({"method", "precision_mean", "precision_std", "recall_mean", "recall_std", "proposals_per_sample"});
    for (const auto& s : rep.summary)
      w.row(s.method, s.precision_mean, s.precision_std, s.recall_mean, s.recall_std, s.proposals_per_sample);
  }
  json times = json::object();
  for (const auto& s : rep.summary) times[s.method] = s.wall_time_s;
  run.results["wall_time_s_by_method"] = times;
  run.results["surrogate_weights"] = rep.surrogate_weights;
  run.results["target"] = {{"sigma", c.target_sigma}, {"spacing", c.spacing}};
  run.results["precision"] = {{"baseline", rep.method("baseline").precision_mean},
                              {"obrs", rep.method("obrs").precision_mean},
                              {"drs", rep.method("drs").precision_mean}};
  for (const auto& r : rep.rows) {
    run.check(r.precision >= 0.0 && r.precision <= 1.0 && r.recall >= 0.0 && r.recall <= 1.0,
              "precision/recall outside [0,1]");
    run.check(r.proposals_used >= c.n_samples, "fewer proposals than samples");
  }
}

// ---------------------------------------------------------------------------
// Generic helpers over user-supplied distributions.

struct DistPair {
  AnyDist target;
  AnyDist proposal;
};

DistPair dists_from(const json& cfg) {
  DistPair d{dist_from_json(cfg.at("target")), dist_from_json(cfg.at("proposal"))};
  if (d.target.index() != d.proposal.index()) throw UsageError("target and proposal must have the same type");
  return d;
}

// Calibration table: exact on finite supports, quadrature for 1D mixtures,
// a fixed sample set otherwise (or when mode = mc).
ProposalTable calibration_table(const DistPair& d, const std::string& mode, std::size_t n, std::uint64_t seed,
                                std::size_t nodes, double* eps) {
  if (mode != "mc") {
    if (const auto* p = std::get_if<FiniteDist>(&d.target)) {
      *eps = kExactEps;
      return ProposalTable::from_finite(*p, std::get<FiniteDist>(d.proposal));
    }
    if (const auto* p = std::get_if<Mixture1D>(&d.target)) {
      *eps = kExactEps;
      const auto dd = discretize(*p, std::get<Mixture1D>(d.proposal), nodes);
      return ProposalTable::from_finite(dd.p, dd.q);
    }
    if (mode != "exact" && mode != "quadrature") throw UsageError("unknown --mode " + mode);
    if (mode == "exact" || mode == "quadrature") {
      if (!std::holds_alternative<Mixture2D>(d.target)) throw UsageError("unsupported distribution");
    }
  }
  *eps = kSampleEps;
  return std::visit(
      [&](const auto& p) -> ProposalTable {
        using T = std::decay_t<decltype(p)>;
        const auto& q = std::get<T>(d.proposal);
        return ProposalTable::from_samples(ratio(p, q), q, n, seed);
      },
      d.target);
}

AcceptanceSpec acceptance_for(const json& cfg, const DistPair& d, Run& run) {
  if (cfg.contains("acceptance") && !cfg["acceptance"].is_null()) return acceptance_from_json(cfg["acceptance"]);
  if ((!cfg.contains("budget") || cfg["budget"].is_null()) && (!cfg.contains("rate") || cfg["rate"].is_null()))
    return AcceptanceSpec::unit();
  const double K = budget_from(cfg);
  std::string mode = cfg.at("mode").get<std::string>();
  if (std::holds_alternative<Mixture2D>(d.target)) mode = "mc";
  double eps = kExactEps;
  const std::uint64_t calib_seed = cfg.contains("seed") && !cfg["seed"].is_null() ? seed_of(cfg) ^ 0x5bd1e995ull : 0;
  if (mode == "mc") seed_of(cfg);
  const auto t = calibration_table(d, mode, cfg.at("calibration_n").get<std::size_t>(), calib_seed,
                                   cfg.at("nodes").get<std::size_t>(), &eps);
  const double M = t.max_ratio();
  const auto ck = solve_c_K(t, K, M, eps);
  run.results["calibration"] = {{"mode", mode}, {"M", M}, {"c_K", ck.c_K}, {"rate", ck.rate}, {"size", t.size()}};
  return ck.spec(K);
}

void cmd_sample(const json& cfg, Run& run) {
  const std::uint64_t seed = seed_of(cfg);
  const auto n = cfg.at("n").get<std::size_t>();
  if (n == 0) throw UsageError("--n must be >= 1");
  const auto max_draws = cfg.at("max_draws").get<std::size_t>();
  const auto d = dists_from(cfg);
  const auto spec = acceptance_for(cfg, d, run);
  std::mt19937_64 rng(seed);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        const auto& q = std::get<T>(d.proposal);
        const auto lr = ratio(p, q);
        auto sampler = [&](std::mt19937_64& g) { return sample_one(q, g); };
        const auto res = rejection_sample(sampler, bind(spec, lr), n, rng, max_draws);
        auto f = run.open("samples.csv");
        CsvWriter w(f);
        if constexpr (std::is_same_v<T, FiniteDist>) {
          w.header({"index"});
          for (auto i : res.samples) w.row(i);
        } else if constexpr (std::is_same_v<T, Mixture1D>) {
          w.header({"x"});
          for (const auto& x : res.samples) w.row(x[0]);
        } else {
          w.header({"x", "y"});
          for (const auto& x : res.samples) w.row(x[0], x[1]);
        }
        run.results["seed"] = seed;
        run.results["n_target"] = n;
        run.results["draws_used"] = res.draws_used;
        run.results["ratio_evals"] = res.ratio_evals;
        run.results["measured_rate"] = res.measured_rate();
      },
      d.target);
  run.results["acceptance"] = to_json_value(spec);
}

void cmd_ck(const json& cfg, Run& run) {
  const auto d = dists_from(cfg);
  const double K = budget_from(cfg);
  std::string mode = cfg.at("mode").get<std::string>();
  if (std::holds_alternative<Mixture2D>(d.target)) mode = "mc";
  double eps = kExactEps;
  const std::uint64_t seed = mode == "mc" ? seed_of(cfg) : 0;
  const auto t = calibration_table(d, mode, cfg.at("n").get<std::size_t>(), seed, cfg.at("nodes").get<std::size_t>(), &eps);
  const double M = t.max_ratio();
  const auto ck = solve_c_K(t, K, M, eps);
  run.results = {{"mode", mode},          {"K", K},
                 {"M", M},                {"c_K", ck.c_K},
                 {"rate", ck.rate},       {"iterations", ck.iterations},
                 {"degenerate", ck.degenerate}, {"unbudgeted", ck.unbudgeted}};
  if (std::isfinite(M)) run.results["acceptance"] = to_json_value(ck.spec(K));
  run.check(ck.degenerate || ck.unbudgeted || std::fabs(ck.rate - 1.0 / K) <= std::max(eps, 1e-9),
            "acceptance rate misses the budget");
}

void cmd_divergence(const json& cfg, Run& run) {
  const auto d = dists_from(cfg);
  const auto gen = Generator::parse(cfg.at("gen").get<std::string>());
  std::string mode = cfg.at("mode").get<std::string>();
  DivergenceEstimate est;
  if (mode != "mc" && std::holds_alternative<FiniteDist>(d.target)) {
    mode = "exact";
    est = divergence_finite(gen, std::get<FiniteDist>(d.target), std::get<FiniteDist>(d.proposal));
  } else if (mode != "mc" && std::holds_alternative<Mixture1D>(d.target)) {
    mode = "quadrature";
    const auto dd = discretize(std::get<Mixture1D>(d.target), std::get<Mixture1D>(d.proposal),
                               cfg.at("nodes").get<std::size_t>());
    est = divergence_finite(gen, dd.p, dd.q);
  } else {
    mode = "mc";
    const std::uint64_t seed = seed_of(cfg);
    est = std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          const auto& q = std::get<T>(d.proposal);
          return divergence_mc(gen, ratio(p, q), [&](std::mt19937_64& g) { return sample_one(q, g); },
                               cfg.at("n").get<std::size_t>(), seed);
        },
        d.target);
  }
  run.results = {{"generator", gen.name()}, {"mode", mode}, {"value", est.value}, {"std_error", est.std_error},
                 {"n", est.n}};
}

void cmd_pr(const json& cfg, Run& run) {
  const auto d = dists_from(cfg);
  std::string mode = cfg.at("mode").get<std::string>();
  const auto grid = logspace(cfg.at("lambda_min").get<double>(), cfg.at("lambda_max").get<double>(),
                             cfg.at("lambda_n").get<std::size_t>());
  PRCurve c;
  if (mode != "mc" && std::holds_alternative<FiniteDist>(d.target)) {
    c = pr_curve(std::get<FiniteDist>(d.target), std::get<FiniteDist>(d.proposal), grid);
  } else if (mode != "mc" && std::holds_alternative<Mixture1D>(d.target)) {
    c = pr_curve(std::get<Mixture1D>(d.target), std::get<Mixture1D>(d.proposal), grid,
                 cfg.at("nodes").get<std::size_t>());
  } else {
    const std::uint64_t seed = seed_of(cfg);
    c = std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          const auto& q = std::get<T>(d.proposal);
          return pr_curve_mc(ratio(p, q), p, q, grid, cfg.at("n").get<std::size_t>(), seed);
        },
        d.target);
  }
  write_pr(run, "pr.csv", c);
  run.results = {{"mode", to_string(c.mode)}, {"n", c.n}, {"points", c.points.size()}};
}

// ---------------------------------------------------------------------------

using Handler = void (*)(const json&, Run&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"table1", cmd_table1},     {"fig2", cmd_fig2},   {"landscape", cmd_landscape},
      {"fit", cmd_fit},           {"bounds", cmd_bounds}, {"gaussians25", cmd_gaussians25},
      {"sample", cmd_sample},     {"ck", cmd_ck},       {"divergence", cmd_divergence},
      {"pr", cmd_pr}};
  return h;
}

int execute(const std::string& command, const json& cfg, const fs::path& out, bool quiet) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) throw UsageError("unknown command '" + command + "'");
  Run run;
  run.out = out;
  const auto t0 = std::chrono::steady_clock::now();
  it->second(cfg, run);
  RunManifest m;
  m.command = command;
  m.config = cfg;
  m.seed = cfg.contains("seed") && !cfg["seed"].is_null() ? cfg["seed"].get<std::uint64_t>() : 0;
  m.outputs = run.outputs;
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.results = run.results;
  m.results["checks_failed"] = run.failures;
  fs::create_directories(out);
  std::ofstream(out / "manifest.json") << to_json_value(m).dump(2) << '\n';
  if (!quiet) std::cout << m.results.dump(2) << '\n';
  for (const auto& f : run.failures) std::cerr << "check failed: " << f << '\n';
  return run.failures.empty() ? 0 : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal budgeted rejection sampling: experiments and tools"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string out = "obrs_out";
  bool quiet = false;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_flag("--quiet", quiet, "Do not echo results to stdout");

  std::uint64_t seed = 0;
  std::string gen = "gan", mode = "exact", target, proposal, acceptance, budgets = "1,2,5";
  double budget = 0.0, rate = 0.0;
  std::size_t nodes = kMinQuadratureNodes;

  auto add_budget = [&](CLI::App* sc) {
    auto* b = sc->add_option("--budget", budget, "Sampling budget K >= 1");
    auto* r = sc->add_option("--rate", rate, "Target acceptance rate in (0,1]");
    b->excludes(r);
    r->excludes(b);
  };
  auto add_seed = [&](CLI::App* sc, bool required) {
    auto* o = sc->add_option("--seed", seed, "64-bit RNG seed");
    if (required) o->required();
  };
  auto add_pair = [&](CLI::App* sc, bool required) {
    auto* t = sc->add_option("--target", target, "Target distribution: JSON file or inline JSON");
    auto* p = sc->add_option("--proposal", proposal, "Proposal distribution: JSON file or inline JSON");
    if (required) {
      t->required();
      p->required();
    }
  };

  // table1
  double u_min = 1e-3, u_max = 1e3, pr_lambda = 2.0;
  std::size_t u_n = 61;
  auto* c_table1 = app.add_subcommand("table1", "Generator values, conjugates and ratio round trips");
  c_table1->add_option("--u-min", u_min)->capture_default_str();
  c_table1->add_option("--u-max", u_max)->capture_default_str();
  c_table1->add_option("--n", u_n)->capture_default_str();
  c_table1->add_option("--pr-lambda", pr_lambda)->capture_default_str();

  // fig2
  auto* c_fig2 = app.add_subcommand("fig2", "Densities, acceptance functions and PR curves for a 1D pair");
  add_budget(c_fig2);
  add_pair(c_fig2, false);
  c_fig2->add_option("--gen", gen)->capture_default_str();
  c_fig2->add_option("--nodes", nodes)->capture_default_str();

  // landscape
  double th_min = 0.1, th_max = 2.5, spacing = kFig3TargetSpacing;
  std::size_t th_n = 241;
  auto* c_land = app.add_subcommand("landscape", "Loss over the 10-Gaussian family for several budgets");
  c_land->add_option("--gen", gen)->capture_default_str();
  c_land->add_option("--budgets", budgets, "Comma-separated budgets")->capture_default_str();
  c_land->add_option("--theta-min", th_min)->capture_default_str();
  c_land->add_option("--theta-max", th_max)->capture_default_str();
  c_land->add_option("--theta-n", th_n)->capture_default_str();
  c_land->add_option("--target-spacing", spacing)->capture_default_str();
  c_land->add_option("--nodes", nodes)->capture_default_str();

  // fit
  double mu_min = -3, mu_max = 3, sg_min = 0.2, sg_max = 3;
  std::size_t mu_n = 121, sg_n = 141;
  std::string fit_budgets = "1,2";
  auto* c_fit = app.add_subcommand("fit", "Grid search of a single Gaussian against a 1D target");
  c_fit->add_option("--gen", gen)->capture_default_str();
  c_fit->add_option("--budgets", fit_budgets, "Comma-separated budgets")->capture_default_str();
  c_fit->add_option("--target", target, "Target distribution (default: two modes at +-2)");
  c_fit->add_option("--mu-min", mu_min)->capture_default_str();
  c_fit->add_option("--mu-max", mu_max)->capture_default_str();
  c_fit->add_option("--mu-n", mu_n)->capture_default_str();
  c_fit->add_option("--sigma-min", sg_min)->capture_default_str();
  c_fit->add_option("--sigma-max", sg_max)->capture_default_str();
  c_fit->add_option("--sigma-n", sg_n)->capture_default_str();
  c_fit->add_option("--nodes", nodes)->capture_default_str();

  // bounds
  std::size_t instances = 200, max_atoms = 32;
  auto* c_bounds = app.add_subcommand("bounds", "Improvement bounds over random finite instances");
  add_seed(c_bounds, true);
  c_bounds->add_option("--instances", instances)->capture_default_str();
  c_bounds->add_option("--max-atoms", max_atoms)->capture_default_str();

  // gaussians25
  Gaussians25Config g25;
  auto* c_g25 = app.add_subcommand("gaussians25", "25 Gaussians: baseline vs OBRS vs DRS at a matched rate");
  add_seed(c_g25, true);
  c_g25->add_option("--rate", g25.target_rate)->capture_default_str();
  c_g25->add_option("--n", g25.n_samples)->capture_default_str();
  c_g25->add_option("--repeats", g25.repeats)->capture_default_str();
  c_g25->add_option("--surrogate-sigma", g25.surrogate_sigma)->capture_default_str();
  c_g25->add_option("--jitter-concentration", g25.jitter_concentration)->capture_default_str();
  c_g25->add_option("--calibration-n", g25.calibration_n)->capture_default_str();

  // sample
  std::size_t n = 1000, calibration_n = 100000, max_draws = 0;
  auto* c_sample = app.add_subcommand("sample", "Rejection sampling from a proposal");
  add_seed(c_sample, true);
  add_pair(c_sample, true);
  add_budget(c_sample);
  c_sample->add_option("--acceptance", acceptance, "Acceptance spec: JSON file or inline JSON");
  c_sample->add_option("--n", n)->capture_default_str();
  c_sample->add_option("--max-draws", max_draws, "Proposal cap (default 1000 n)");
  c_sample->add_option("--calibration-n", calibration_n)->capture_default_str();
  c_sample->add_option("--mode", mode, "exact|quadrature|mc")->capture_default_str();
  c_sample->add_option("--nodes", nodes)->capture_default_str();

  // ck
  std::size_t mc_n = 100000;
  auto* c_ck = app.add_subcommand("ck", "Solve for the OBRS constant c_K");
  add_pair(c_ck, true);
  add_budget(c_ck);
  add_seed(c_ck, false);
  c_ck->add_option("--mode", mode, "exact|quadrature|mc")->capture_default_str();
  c_ck->add_option("--n", mc_n, "Sample size in mc mode")->capture_default_str();
  c_ck->add_option("--nodes", nodes)->capture_default_str();

  // divergence
  auto* c_div = app.add_subcommand("divergence", "f-divergence between two distributions");
  add_pair(c_div, true);
  add_seed(c_div, false);
  c_div->add_option("--gen", gen)->capture_default_str();
  c_div->add_option("--mode", mode, "exact|quadrature|mc")->capture_default_str();
  c_div->add_option("--n", mc_n, "Sample size in mc mode")->capture_default_str();
  c_div->add_option("--nodes", nodes)->capture_default_str();

  // pr
  double l_min = 1e-3, l_max = 1e3;
  std::size_t l_n = 201;
  auto* c_pr = app.add_subcommand("pr", "Precision-recall curve between two distributions");
  add_pair(c_pr, true);
  add_seed(c_pr, false);
  c_pr->add_option("--mode", mode, "exact|quadrature|mc")->capture_default_str();
  c_pr->add_option("--n", mc_n, "Sample size in mc mode")->capture_default_str();
  c_pr->add_option("--nodes", nodes)->capture_default_str();
  c_pr->add_option("--lambda-min", l_min)->capture_default_str();
  c_pr->add_option("--lambda-max", l_max)->capture_default_str();
  c_pr->add_option("--lambda-n", l_n)->capture_default_str();

  // rerun
  std::string manifest_path;
  auto* c_rerun = app.add_subcommand("rerun", "Replay a manifest's command and config");
  c_rerun->add_option("manifest", manifest_path, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    auto* sc = app.get_subcommands().front();
    const std::string cmd = sc->get_name();
    const bool has_seed = sc->get_option_no_throw("--seed") && sc->count("--seed") > 0;
    json cfg = json::object();
    if (has_seed) cfg["seed"] = seed;
    auto set_budget = [&] {
      cfg["budget"] = sc->count("--budget") ? json(budget) : json(nullptr);
      cfg["rate"] = sc->count("--rate") ? json(rate) : json(nullptr);
    };
    auto set_pair = [&] {
      if (!target.empty()) cfg["target"] = load_json_arg(target);
      if (!proposal.empty()) cfg["proposal"] = load_json_arg(proposal);
    };

    if (cmd == "rerun") {
      std::ifstream f(manifest_path);
      if (!f) throw UsageError("cannot read " + manifest_path);
      const auto m = manifest_from_json(json::parse(f));
      const fs::path dest = app.count("--out") ? fs::path(out) : fs::path(manifest_path).parent_path();
      return execute(m.command, m.config, dest.empty() ? fs::path(".") : dest, quiet);
    }
    if (cmd == "table1") {
      cfg.update({{"u_min", u_min}, {"u_max", u_max}, {"n", u_n}, {"pr_lambda", pr_lambda}});
    } else if (cmd == "fig2") {
      set_budget();
      set_pair();
      cfg.update({{"gen", gen}, {"nodes", nodes}});
      if (cfg["budget"].is_null() && cfg["rate"].is_null()) cfg["budget"] = 2.0;
    } else if (cmd == "landscape") {
      cfg.update({{"gen", gen}, {"budgets", parse_list(budgets)}, {"theta_min", th_min}, {"theta_max", th_max},
                  {"theta_n", th_n}, {"target_spacing", spacing}, {"nodes", nodes}});
    } else if (cmd == "fit") {
      cfg.update({{"gen", gen}, {"budgets", parse_list(fit_budgets)}, {"mu_min", mu_min}, {"mu_max", mu_max},
                  {"mu_n", mu_n}, {"sigma_min", sg_min}, {"sigma_max", sg_max}, {"sigma_n", sg_n},
                  {"nodes", nodes}});
      cfg["target"] = target.empty() ? to_json_value(fig4_target()) : load_json_arg(target);
    } else if (cmd == "bounds") {
      cfg.update({{"instances", instances}, {"max_atoms", max_atoms}});
    } else if (cmd == "gaussians25") {
      cfg.update({{"rate", g25.target_rate}, {"n", g25.n_samples}, {"repeats", g25.repeats},
                  {"surrogate_sigma", g25.surrogate_sigma}, {"jitter_concentration", g25.jitter_concentration},
                  {"calibration_n", g25.calibration_n}});
    } else if (cmd == "sample") {
      set_budget();
      set_pair();
      cfg.update({{"n", n}, {"max_draws", max_draws ? max_draws : 1000 * n}, {"calibration_n", calibration_n},
                  {"mode", mode}, {"nodes", nodes}});
      cfg["acceptance"] = acceptance.empty() ? json(nullptr) : load_json_arg(acceptance);
    } else if (cmd == "ck") {
      set_budget();
      set_pair();
      cfg.update({{"mode", mode}, {"n", mc_n}, {"nodes", nodes}});
    } else if (cmd == "divergence") {
      set_pair();
      cfg.update({{"gen", gen}, {"mode", mode}, {"n", mc_n}, {"nodes", nodes}});
    } else if (cmd == "pr") {
      set_pair();
      cfg.update({{"mode", mode}, {"n", mc_n}, {"nodes", nodes}, {"lambda_min", l_min}, {"lambda_max", l_max},
                  {"lambda_n", l_n}});
    }
    return execute(cmd, cfg, out, quiet);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "usage error: bad JSON: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::bad_variant_access&) {
    std::cerr << "usage error: distribution type not supported by this command\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheck;
  }
}
