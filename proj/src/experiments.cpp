#include "pgate/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "pgate/errors.hpp"
#include "pgate/parallel.hpp"
#include "pgate/rng.hpp"

namespace pgate {

namespace {

std::size_t kind_index(FilterKind k) {
  for (std::size_t i = 0; i < std::size(kAllFilterKinds); ++i) {
    if (kAllFilterKinds[i] == k) return i;
  }
  return 0;
}

std::optional<Trajectory> try_simulate(const SimConfig& sc) {
  try {
    return simulate(sc);
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
}

double mean_finite(const std::vector<double>& x) {
  double s = 0.0;
  std::size_t n = 0;
  for (double v : x) {
    if (std::isfinite(v)) {
      s += v;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::nan("");
}

double improvement(double pg, double base) { return 100.0 * (1.0 - pg / base); }

}  // namespace

std::uint64_t replication_seed(std::uint64_t base, std::size_t k) noexcept { return derive_seed(base, k); }

std::uint64_t filter_seed(std::uint64_t rep_seed, FilterKind kind) noexcept {
  return derive_seed(rep_seed, 100 + kind_index(standard_counterpart(kind)));
}

std::vector<double> run_filters_on(const Trajectory& traj, const ExperimentSettings& s,
                                   const std::vector<FilterKind>& kinds, std::uint64_t rep_seed) {
  std::vector<double> out;
  out.reserve(kinds.size());
  for (FilterKind k : kinds) {
    FilterConfig fc = s.filter;
    fc.kind = k;
    fc.seed = filter_seed(rep_seed, k);
    double r = std::nan("");
    try {
      r = rmse(run_filter(fc, traj.obs, s.sim.dt).mean, traj.truth);
    } catch (const Error&) {
    }
    out.push_back(std::isfinite(r) ? r : std::nan(""));
  }
  return out;
}

std::vector<BenchmarkRow> aggregate_rows(const std::vector<FilterKind>& kinds,
                                         const std::vector<std::vector<double>>& rmse, FilterKind baseline) {
  const auto bit = std::find(kinds.begin(), kinds.end(), baseline);
  if (bit == kinds.end()) throw ConfigError("baseline kind missing from the RMSE matrix");
  const auto& base = rmse[static_cast<std::size_t>(bit - kinds.begin())];
  std::vector<BenchmarkRow> rows;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    std::vector<double> a, b;
    std::size_t failures = 0;
    for (std::size_t r = 0; r < rmse[i].size(); ++r) {
      if (!std::isfinite(rmse[i][r])) {
        ++failures;
        continue;
      }
      if (!std::isfinite(base[r])) continue;
      a.push_back(rmse[i][r]);
      b.push_back(base[r]);
    }
    BenchmarkRow row = make_row(display_name(kinds[i]), a, b, kinds[i] == baseline);
    row.failures = failures;
    rows.push_back(std::move(row));
  }
  return rows;
}

BenchmarkResult run_benchmark(const ExperimentSettings& s) {
  if (s.n_reps == 0) throw ConfigError("n_reps must be >= 1");
  if (s.kinds.empty()) throw ConfigError("benchmark needs at least one filter kind");
  s.sim.validate();
  std::vector<FilterKind> run_kinds = s.kinds;
  if (std::find(run_kinds.begin(), run_kinds.end(), FilterKind::EkfStd) == run_kinds.end()) {
    run_kinds.push_back(FilterKind::EkfStd);
  }
  const auto per_rep = parallel_map(s.n_reps, s.threads, [&](std::size_t r) {
    SimConfig sc = s.sim;
    sc.seed = replication_seed(s.base_seed, r);
    const auto traj = try_simulate(sc);
    if (!traj) return std::vector<double>(run_kinds.size(), std::nan(""));
    return run_filters_on(*traj, s, run_kinds, sc.seed);
  });
  BenchmarkResult res;
  res.kinds = run_kinds;
  res.rmse.assign(run_kinds.size(), std::vector<double>(s.n_reps));
  for (std::size_t r = 0; r < s.n_reps; ++r) {
    bool all_nan = true;
    for (std::size_t k = 0; k < run_kinds.size(); ++k) {
      res.rmse[k][r] = per_rep[r][k];
      all_nan = all_nan && std::isnan(per_rep[r][k]);
    }
    res.sim_failures += all_nan ? 1 : 0;
  }
  res.rows = aggregate_rows(run_kinds, res.rmse, FilterKind::EkfStd);
  if (run_kinds.size() != s.kinds.size()) {
    res.kinds.pop_back();
    res.rmse.pop_back();
    res.rows.pop_back();
  }
  return res;
}

GoldilocksResult run_goldilocks(const ExperimentSettings& s, const std::vector<double>& g_values,
                                const std::vector<double>& alphas, double lambda) {
  if (g_values.empty() || alphas.empty()) throw ConfigError("goldilocks needs g and alpha values");
  if (s.n_reps == 0) throw ConfigError("n_reps must be >= 1");
  GoldilocksResult res;
  res.g_values = g_values;
  res.alphas = alphas;
  res.lambda = lambda;
  const std::size_t na = alphas.size();
  const std::size_t ng = g_values.size();
  // Per (alpha, rep): EKF Std RMSE followed by one PG-EKF RMSE per g.
  const auto cells = parallel_map(na * s.n_reps, s.threads, [&](std::size_t idx) {
    const std::size_t ai = idx / s.n_reps;
    const std::size_t r = idx % s.n_reps;
    SimConfig sc = s.sim;
    sc.params.alpha = alphas[ai];
    sc.seed = replication_seed(s.base_seed, r);
    std::vector<double> out(ng + 1, std::nan(""));
    const auto traj = try_simulate(sc);
    if (!traj) return out;
    ExperimentSettings local = s;
    local.sim = sc;
    local.filter.assumed_params.alpha = alphas[ai];
    out[0] = run_filters_on(*traj, local, {FilterKind::EkfStd}, sc.seed)[0];
    local.filter.gp.lambda = lambda;
    for (std::size_t gi = 0; gi < ng; ++gi) {
      local.filter.gp.g = g_values[gi];
      out[gi + 1] = run_filters_on(*traj, local, {FilterKind::PgEkf}, sc.seed)[0];
    }
    return out;
  });
  for (std::size_t ai = 0; ai < na; ++ai) {
    PotentialParams p = s.sim.params;
    p.alpha = alphas[ai];
    res.barrier_heights.push_back(landscape(p).barrier_height);
    std::vector<double> row(ng);
    std::vector<double> base;
    for (std::size_t r = 0; r < s.n_reps; ++r) base.push_back(cells[ai * s.n_reps + r][0]);
    res.ekf_std_rmse.push_back(mean_finite(base));
    for (std::size_t gi = 0; gi < ng; ++gi) {
      std::vector<double> v;
      for (std::size_t r = 0; r < s.n_reps; ++r) v.push_back(cells[ai * s.n_reps + r][gi + 1]);
      row[gi] = mean_finite(v);
    }
    const auto best = std::min_element(row.begin(), row.end());
    res.best_g.push_back(g_values[static_cast<std::size_t>(best - row.begin())]);
    std::vector<double> deg(ng);
    for (std::size_t gi = 0; gi < ng; ++gi) deg[gi] = 100.0 * (row[gi] / *best - 1.0);
    res.rmse.push_back(std::move(row));
    res.degradation_pct.push_back(std::move(deg));
  }
  return res;
}

MisspecResult run_misspec(const ExperimentSettings& s, const std::vector<double>& alphas,
                          const std::vector<double>& betas) {
  if (alphas.empty() || betas.empty()) throw ConfigError("misspec needs alpha and beta values");
  if (s.n_reps == 0) throw ConfigError("n_reps must be >= 1");
  const std::size_t na = alphas.size();
  const std::size_t nb = betas.size();
  // Per rep: EKF Std with the true parameters, then PG-EKF per (alpha, beta).
  const auto per_rep = parallel_map(s.n_reps, s.threads, [&](std::size_t r) {
    SimConfig sc = s.sim;
    sc.seed = replication_seed(s.base_seed, r);
    std::vector<double> out(1 + na * nb, std::nan(""));
    const auto traj = try_simulate(sc);
    if (!traj) return out;
    ExperimentSettings local = s;
    local.filter.assumed_params = s.sim.params;
    out[0] = run_filters_on(*traj, local, {FilterKind::EkfStd}, sc.seed)[0];
    for (std::size_t ai = 0; ai < na; ++ai) {
      for (std::size_t bi = 0; bi < nb; ++bi) {
        local.filter.assumed_params = {alphas[ai], betas[bi], s.sim.params.gamma};
        out[1 + ai * nb + bi] = run_filters_on(*traj, local, {FilterKind::PgEkf}, sc.seed)[0];
      }
    }
    return out;
  });
  MisspecResult res;
  res.alphas = alphas;
  res.betas = betas;
  std::vector<double> base;
  for (const auto& v : per_rep) base.push_back(v[0]);
  const double base_mean = mean_finite(base);
  for (std::size_t ai = 0; ai < na; ++ai) {
    std::vector<double> pg_row, std_row, imp_row;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      std::vector<double> v;
      for (const auto& rep : per_rep) v.push_back(rep[1 + ai * nb + bi]);
      const double m = mean_finite(v);
      pg_row.push_back(m);
      std_row.push_back(base_mean);
      imp_row.push_back(improvement(m, base_mean));
    }
    res.rmse_pg.push_back(std::move(pg_row));
    res.rmse_std.push_back(std::move(std_row));
    res.improvement.push_back(std::move(imp_row));
  }
  return res;
}

KramersResult run_kramers(const ExperimentSettings& s, const KramersArmSettings& k) {
  const std::vector<FilterKind> kinds{FilterKind::EkfStd, FilterKind::PgEkf, FilterKind::NtEkf};
  KramersResult res;

  ExperimentSettings forced = s;
  forced.sim.n_steps = k.forced_n_steps;
  forced.sim.mode = SimMode::Forced;
  forced.n_reps = k.forced_reps;
  forced.kinds = kinds;
  const BenchmarkResult fb = run_benchmark(forced);
  res.forced.mode = "forced";
  res.forced.attempted = k.forced_reps;
  res.forced.accepted = k.forced_reps - fb.sim_failures;
  res.forced.rows = fb.rows;

  ExperimentSettings spont = s;
  spont.sim.sigma = k.kramers_sigma;
  spont.sim.n_steps = k.kramers_n_steps;
  spont.sim.mode = SimMode::Kramers;
  spont.sim.validate();
  const std::uint64_t arm_base = derive_seed(s.base_seed, 0x4B52);
  auto attempt = [&](std::size_t a) -> std::optional<std::vector<double>> {
    SimConfig sc = spont.sim;
    sc.seed = replication_seed(arm_base, a);
    std::optional<Trajectory> t;
    try {
      t = simulate_kramers(sc, k.min_crossings);
    } catch (const DivergenceError&) {
    }
    if (!t) return std::nullopt;
    return run_filters_on(*t, spont, kinds, sc.seed);
  };
  auto results = parallel_map(k.kramers_reps, s.threads, attempt);
  std::size_t attempted = k.kramers_reps;
  auto accepted = [&] {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& o) { return o.has_value(); }));
  };
  const std::size_t cap = k.oversampling * k.kramers_reps;
  while (accepted() < k.min_accepted && attempted < cap) results.push_back(attempt(attempted++));
  if (accepted() < k.min_accepted) {
    throw InsufficientCrossings("kramers arm: " + std::to_string(accepted()) + " of " + std::to_string(attempted) +
                                " seeds reached " + std::to_string(k.min_crossings) + " crossings");
  }
  std::vector<std::vector<double>> rm(kinds.size());
  for (const auto& o : results) {
    if (!o) continue;
    for (std::size_t i = 0; i < kinds.size(); ++i) rm[i].push_back((*o)[i]);
  }
  res.kramers.mode = "kramers";
  res.kramers.attempted = attempted;
  res.kramers.accepted = accepted();
  res.kramers.rows = aggregate_rows(kinds, rm, FilterKind::EkfStd);
  return res;
}

ScarcityResult run_scarcity(const ExperimentSettings& s, const std::vector<std::size_t>& lengths,
                            const std::vector<double>& probs) {
  if (lengths.empty() || probs.empty()) throw ConfigError("scarcity needs lengths and probabilities");
  if (s.n_reps == 0) throw ConfigError("n_reps must be >= 1");
  const std::size_t np = probs.size();
  const std::size_t nl = lengths.size();
  const std::vector<FilterKind> kinds{FilterKind::EkfStd, FilterKind::PgEkf};
  const auto cells = parallel_map(np * nl * s.n_reps, s.threads, [&](std::size_t idx) {
    const std::size_t pi = idx / (nl * s.n_reps);
    const std::size_t li = (idx / s.n_reps) % nl;
    const std::size_t r = idx % s.n_reps;
    SimConfig sc = s.sim;
    sc.n_steps = lengths[li];
    sc.outlier_prob = probs[pi];
    sc.seed = replication_seed(s.base_seed, r);
    const auto traj = try_simulate(sc);
    if (!traj) return std::vector<double>(2, std::nan(""));
    ExperimentSettings local = s;
    local.sim = sc;
    return run_filters_on(*traj, local, kinds, sc.seed);
  });
  ScarcityResult res;
  res.lengths = lengths;
  res.probs = probs;
  for (std::size_t pi = 0; pi < np; ++pi) {
    std::vector<double> row;
    for (std::size_t li = 0; li < nl; ++li) {
      std::vector<double> a, b;
      for (std::size_t r = 0; r < s.n_reps; ++r) {
        const auto& c = cells[(pi * nl + li) * s.n_reps + r];
        a.push_back(c[0]);
        b.push_back(c[1]);
      }
      row.push_back(improvement(mean_finite(b), mean_finite(a)));
    }
    res.improvement.push_back(std::move(row));
  }
  return res;
}

}  // namespace pgate
