#include "pgate/ngrip.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "pgate/errors.hpp"
#include "pgate/filters.hpp"
#include "pgate/io.hpp"
#include "pgate/kde.hpp"
#include "pgate/parallel.hpp"
#include "pgate/rng.hpp"
#include "pgate/simulate.hpp"

namespace pgate {

namespace {

bool is_header(const std::vector<std::string>& row) {
  if (row.size() < 2) return false;
  try {
    parse_double(row[1], "header probe");
    return false;
  } catch (const IoError&) {
    return true;
  }
}

struct SupportedDensity {
  std::vector<double> x;
  std::vector<double> d;
};

SupportedDensity supported_density(std::span<const double> xs) {
  const Kde kde(std::vector<double>(xs.begin(), xs.end()));
  const DensityGrid g = evaluate_on_grid(kde);
  const double top = *std::max_element(g.density.begin(), g.density.end());
  SupportedDensity s;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    if (g.density[i] >= kDensityFloorFrac * top) {
      s.x.push_back(g.x[i]);
      s.d.push_back(g.density[i]);
    }
  }
  return s;
}

}  // namespace

void ProxyRecord::validate() const {
  if (age.size() != value.size()) throw LengthMismatch("proxy record: age and value lengths differ");
  if (age.size() < 2) return;
  const bool up = age[1] > age[0];
  for (std::size_t i = 1; i < age.size(); ++i) {
    if (up ? !(age[i] > age[i - 1]) : !(age[i] < age[i - 1])) {
      throw ConfigError("proxy record: age is not strictly monotone at row " + std::to_string(i));
    }
  }
}

ProxyRecord parse_proxy_csv(const std::string& text, const std::string& source_id) {
  auto rows = parse_csv(text);
  ProxyRecord rec;
  rec.source_id = source_id;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 && is_header(rows[i])) continue;
    if (rows[i].size() < 2) throw IoError("proxy row " + std::to_string(i) + " needs age,value");
    rec.age.push_back(parse_double(rows[i][0], "age"));
    rec.value.push_back(parse_double(rows[i][1], "value"));
  }
  rec.validate();
  return rec;
}

ProxyRecord load_proxy_csv(const std::filesystem::path& path) {
  return parse_proxy_csv(read_text(path), path.filename().string());
}

std::vector<EventOnset> parse_events_csv(const std::string& text) {
  auto rows = parse_csv(text);
  std::vector<EventOnset> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 && is_header(rows[i])) continue;
    if (rows[i].size() < 2) throw IoError("event row " + std::to_string(i) + " needs event_id,onset_age");
    out.push_back({rows[i][0], parse_double(rows[i][1], "onset_age")});
  }
  return out;
}

std::vector<EventOnset> load_events_csv(const std::filesystem::path& path) {
  return parse_events_csv(read_text(path));
}

std::vector<std::vector<double>> segment_events(const ProxyRecord& rec, const std::vector<EventOnset>& events,
                                                std::size_t length) {
  rec.validate();
  if (length < kMinSegmentLength) throw ConfigError("segment length must be >= 30");
  if (rec.value.size() < length) throw ConfigError("record shorter than one segment");
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::vector<std::vector<double>> out;
  for (const auto& ev : events) {
    std::size_t nearest = 0;
    double best = INFINITY;
    for (std::size_t i = 0; i < rec.age.size(); ++i) {
      const double d = std::abs(rec.age[i] - ev.onset_age);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    std::size_t start = nearest >= length / 2 ? nearest - length / 2 : 0;
    start = std::min(start, rec.value.size() - length);
    for (const auto& [s, e] : spans) {
      if (start < e && s < start + length) throw ConfigError("event windows overlap at '" + ev.event_id + "'");
    }
    spans.emplace_back(start, start + length);
    out.emplace_back(rec.value.begin() + static_cast<std::ptrdiff_t>(start),
                     rec.value.begin() + static_cast<std::ptrdiff_t>(start + length));
  }
  return out;
}

Normalization normalize_bimodal(std::span<const double> segment) {
  const Kde kde(std::vector<double>(segment.begin(), segment.end()));
  auto peaks = find_peaks(evaluate_on_grid(kde));
  if (peaks.size() < 2) throw UnimodalSegment("segment has " + std::to_string(peaks.size()) + " prominent mode(s)");
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
  const double m1 = std::min(peaks[0].x, peaks[1].x);
  const double m2 = std::max(peaks[0].x, peaks[1].x);
  Normalization n;
  n.midpoint = 0.5 * (m1 + m2);
  n.scale = 0.5 * (m2 - m1);
  n.normalized.reserve(segment.size());
  for (double x : segment) n.normalized.push_back((x - n.midpoint) / n.scale);
  return n;
}

double estimate_t_eff(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("t_eff needs at least two samples");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += (x[i] - x[i - 1]) * (x[i] - x[i - 1]);
  return 0.5 * s / static_cast<double>(x.size() - 1);
}

double fit_gamma(std::span<const double> normalized) {
  const Kde kde(std::vector<double>(normalized.begin(), normalized.end()));
  const DensityGrid grid = evaluate_on_grid(kde);
  const double top = *std::max_element(grid.density.begin(), grid.density.end());
  std::vector<double> xs, log_d, w;
  for (std::size_t i = 0; i < grid.x.size(); i += 2) {
    if (grid.density[i] >= kDensityFloorFrac * top) {
      xs.push_back(grid.x[i]);
      log_d.push_back(std::log(grid.density[i]));
      w.push_back(grid.density[i]);
    }
  }
  // The model density exp(-V/t) is passed through the same Gaussian kernel
  // before comparison, so smoothing does not bias the fit.
  const std::size_t nu = kFitQuadraturePoints;
  const double lo = grid.x.front();
  const double hi = grid.x.back();
  const double du = (hi - lo) / static_cast<double>(nu - 1);
  std::vector<double> u(nu);
  for (std::size_t j = 0; j < nu; ++j) u[j] = lo + du * static_cast<double>(j);
  const double h = kde.bandwidth();
  std::vector<double> kern(xs.size() * nu);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < nu; ++j) {
      const double z = (xs[i] - u[j]) / h;
      kern[i * nu + j] = std::exp(-0.5 * z * z);
    }
  }
  std::vector<double> vu(nu), boltz(nu), model(xs.size());
  auto misfit = [&](double log_t) {
    const double t = std::exp(log_t);
    const double vmin = *std::min_element(vu.begin(), vu.end());
    for (std::size_t j = 0; j < nu; ++j) boltz[j] = std::exp(-(vu[j] - vmin) / t);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nu; ++j) acc += kern[i * nu + j] * boltz[j];
      model[i] = std::log(std::max(acc, 1e-300));
    }
    double sw = 0.0, off = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sw += w[i];
      off += w[i] * (log_d[i] - model[i]);
    }
    off /= sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = log_d[i] - model[i] - off;
      ss += w[i] * r * r;
    }
    return ss;
  };
  auto profile = [&](double gamma) {
    const PotentialParams p{1.0, 1.0, gamma};
    for (std::size_t j = 0; j < nu; ++j) vu[j] = v(p, u[j]);
    return boost::math::tools::brent_find_minima(misfit, std::log(kFitTempMin), std::log(kFitTempMax), 30).second;
  };
  return boost::math::tools::brent_find_minima(profile, -kGammaSearchLimit, kGammaSearchLimit, 30).first;
}

BoltzmannValidation boltzmann_validate(std::span<const double> normalized, const PotentialParams& params,
                                       double t_eff) {
  if (!(t_eff > 0.0)) throw ConfigError("t_eff must be > 0");
  const SupportedDensity s = supported_density(normalized);
  BoltzmannValidation out;
  out.x = s.x;
  out.weight = s.d;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    out.v_emp.push_back(-t_eff * std::log(s.d[i]));
    out.v_model.push_back(v(params, s.x[i]));
  }
  const double e0 = *std::min_element(out.v_emp.begin(), out.v_emp.end());
  const double m0 = *std::min_element(out.v_model.begin(), out.v_model.end());
  for (auto& e : out.v_emp) e -= e0;
  for (auto& m : out.v_model) m -= m0;
  double sw = 0.0, me = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    sw += out.weight[i];
    me += out.weight[i] * out.v_emp[i];
  }
  me /= sw;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    ss_res += out.weight[i] * (out.v_emp[i] - out.v_model[i]) * (out.v_emp[i] - out.v_model[i]);
    ss_tot += out.weight[i] * (out.v_emp[i] - me) * (out.v_emp[i] - me);
  }
  out.weighted_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -INFINITY);
  return out;
}

GammaSignificance gamma_significance(std::span<const double> gammas, std::uint64_t seed, std::size_t n_boot) {
  if (gammas.size() < 5) throw ConfigError("gamma_significance needs at least 5 values");
  GammaSignificance g;
  g.n = gammas.size();
  g.median = median(gammas);
  g.mean = mean(gammas);
  g.stddev = stddev(gammas);
  if (g.stddev > 0.0) {
    g.t_test = t_test_one_sample(gammas, 0.0);
  } else {
    g.t_test = {0.0, 1.0, static_cast<double>(g.n - 1)};
  }
  try {
    g.wilcoxon = wilcoxon_signed_rank(gammas, 0.0);
  } catch (const AllZeroDifferences&) {
    g.wilcoxon = {};
  }
  g.sign = sign_test(gammas, 0.0);
  g.bootstrap_median = bootstrap_ci(gammas, [](std::span<const double> x) { return median(x); }, n_boot, 0.95, seed);
  return g;
}

std::vector<EventRecord> build_events(const ProxyRecord& rec, const std::vector<EventOnset>& onsets,
                                      std::size_t length) {
  const auto segments = segment_events(rec, onsets, length);
  std::vector<EventRecord> out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    Normalization n = normalize_bimodal(segments[i]);
    EventRecord e;
    e.event_id = onsets[i].event_id;
    e.gamma_hat = fit_gamma(n.normalized);
    e.segment = std::move(n.normalized);
    e.norm_midpoint = n.midpoint;
    e.norm_scale = n.scale;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<double> stride_subsample(std::span<const double> x, std::size_t stride) {
  if (stride == 0) throw ConfigError("stride must be >= 1");
  const std::size_t n = x.size();
  const std::size_t m = (n + stride - 1) / stride;
  if (m < 2) return {x.begin(), x.end()};
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    // Integer rounding of i (n - 1) / (m - 1): spacing stride or stride - 1.
    const std::size_t idx = (2 * i * (n - 1) + (m - 1)) / (2 * (m - 1));
    out[i] = x[idx];
  }
  return out;
}

std::vector<double> contaminate(std::span<const double> truth, double p, double r_out, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("outlier fraction must be in [0, 1]");
  std::vector<double> out(truth.begin(), truth.end());
  if (p == 0.0) return out;
  Rng rng(seed);
  const double sd = std::sqrt(r_out);
  for (double& y : out) {
    const bool hit = rng.bernoulli(p);
    const double e = rng.normal();
    if (hit) y += sd * e;
  }
  return out;
}

NgripBenchResult run_ngrip_benchmark(const std::vector<EventRecord>& events, const NgripBenchConfig& cfg) {
  if (events.empty()) throw ConfigError("ngrip benchmark needs at least one event");
  if (cfg.n_reps == 0) throw ConfigError("n_reps must be >= 1");
  const std::size_t ns = cfg.strides.size();
  const std::size_t np = cfg.outlier_fracs.size();
  const std::size_t nr = cfg.n_reps;
  const double r_out = cfg.outlier_scale * cfg.gp.r0;

  auto run_pair = [&](FilterKind std_kind, FilterKind pg_kind, std::size_t stride, double p, std::uint64_t seed) {
    double sum_std = 0.0, sum_pg = 0.0;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const auto truth = stride_subsample(events[e].segment, stride);
      const auto obs = contaminate(truth, p, r_out, derive_seed(seed, e));
      FilterConfig fc;
      fc.gp = cfg.gp;
      fc.q = cfg.q;
      fc.assumed_params = {1.0, 1.0, events[e].gamma_hat};
      fc.seed = derive_seed(seed, 1000 + e);
      fc.kind = std_kind;
      sum_std += rmse(run_filter(fc, obs, 1.0).mean, truth);
      fc.kind = pg_kind;
      sum_pg += rmse(run_filter(fc, obs, 1.0).mean, truth);
    }
    return std::pair{sum_std / static_cast<double>(events.size()), sum_pg / static_cast<double>(events.size())};
  };

  const auto reps = parallel_map(ns * np * nr, cfg.threads, [&](std::size_t idx) {
    const std::size_t si = idx / (np * nr);
    const std::size_t pi = (idx / nr) % np;
    const std::size_t r = idx % nr;
    const std::uint64_t seed = derive_seed(derive_seed(derive_seed(cfg.seed, si), pi), r);
    return run_pair(FilterKind::EkfStd, FilterKind::PgEkf, cfg.strides[si], cfg.outlier_fracs[pi], seed);
  });

  NgripBenchResult res;
  res.improvement.assign(ns, std::vector<double>(np, 0.0));
  for (std::size_t si = 0; si < ns; ++si) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      std::vector<double> imp, rs, rp;
      for (std::size_t r = 0; r < nr; ++r) {
        const auto& [a, b] = reps[(si * np + pi) * nr + r];
        imp.push_back(100.0 * (1.0 - b / a));
        rs.push_back(a);
        rp.push_back(b);
      }
      NgripCell c;
      c.stride = cfg.strides[si];
      c.length = stride_subsample(events[0].segment, c.stride).size();
      c.outlier_frac = cfg.outlier_fracs[pi];
      c.improvement_mean = mean(imp);
      c.improvement_se = stddev(imp) / std::sqrt(static_cast<double>(nr));
      c.rmse_std = mean(rs);
      c.rmse_pg = mean(rp);
      res.improvement[si][pi] = c.improvement_mean;
      res.cells.push_back(c);
    }
  }
  if (ns >= 2 && np >= 2) res.anova = two_way_anova_variance(res.improvement);
  const auto [pf, pgpf] = run_pair(FilterKind::PfStd, FilterKind::PgPf, 1, 0.0, derive_seed(cfg.seed, 0xF00D));
  res.pf_clean_improvement = 100.0 * (1.0 - pgpf / pf);
  return res;
}

SyntheticNgrip make_synthetic_ngrip(const SyntheticNgripConfig& cfg) {
  SyntheticNgrip out;
  out.record.source_id = "synthetic-gl";
  const std::size_t burn_in = 50;
  for (std::size_t e = 0; e < cfg.n_events; ++e) {
    SimConfig sc;
    sc.params = {1.0, 1.0, cfg.gamma};
    sc.sigma = cfg.sigma;
    sc.dt = cfg.sample_dt;
    sc.n_steps = cfg.samples_per_event + burn_in;
    sc.substeps = static_cast<std::size_t>(std::ceil(cfg.sample_dt / cfg.integration_step));
    sc.mode = SimMode::Kramers;
    sc.x0 = e % 2 == 0 ? -1.0 : 1.0;
    sc.outlier_prob = 0.0;
    // Event windows straddle a transition: redraw blocks that stay in one well.
    std::vector<double> block;
    for (std::size_t attempt = 0; block.empty(); ++attempt) {
      if (attempt == kFixtureMaxAttempts) throw InsufficientCrossings("fixture: no bimodal block for event " +
                                                                      std::to_string(e + 1));
      sc.seed = derive_seed(derive_seed(cfg.seed, e), attempt);
      const auto path = simulate_process(sc);
      std::vector<double> cand;
      for (std::size_t k = burn_in; k < path.size(); ++k) cand.push_back(cfg.value_midpoint + cfg.value_scale * path[k]);
      try {
        normalize_bimodal(cand);
        block = std::move(cand);
      } catch (const UnimodalSegment&) {
      }
    }
    const std::size_t base = out.record.value.size();
    for (double val : block) {
      out.record.age.push_back(10000.0 + static_cast<double>(out.record.age.size()) * cfg.age_step);
      out.record.value.push_back(val);
    }
    out.onsets.push_back({"GS-" + std::to_string(e + 1), out.record.age[base + cfg.samples_per_event / 2]});
  }
  return out;
}

}  // namespace pgate
