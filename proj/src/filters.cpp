#include "pgate/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pgate/errors.hpp"

namespace pgate {

namespace {

struct KindInfo {
  FilterKind kind;
  const char* name;
  const char* token;
};

constexpr KindInfo kKinds[] = {
    {FilterKind::EkfStd, "EKF Std", "ekf_std"},     {FilterKind::PgEkf, "PG-EKF", "pg_ekf"},
    {FilterKind::NtEkf, "NT-EKF", "nt_ekf"},        {FilterKind::EkfRobust, "EKF Robust", "ekf_robust"},
    {FilterKind::UkfStd, "UKF Std", "ukf_std"},     {FilterKind::PgUkf, "PG-UKF", "pg_ukf"},
    {FilterKind::AkfStd, "AKF Std", "akf_std"},     {FilterKind::PgAkf, "PG-AKF", "pg_akf"},
    {FilterKind::EnkfStd, "EnKF Std", "enkf_std"},  {FilterKind::PgEnkf, "PG-EnKF", "pg_enkf"},
    {FilterKind::PfStd, "PF Std", "pf_std"},        {FilterKind::PgPf, "PG-PF", "pg_pf"},
};

const KindInfo& info(FilterKind k) {
  for (const auto& i : kKinds) {
    if (i.kind == k) return i;
  }
  throw ConfigError("unknown filter kind");
}

double state_bound(const FilterConfig& cfg) {
  const LandscapeSummary land = landscape(cfg.assumed_params);
  return cfg.state_bound_factor * std::max(std::abs(land.wells[0]), std::abs(land.wells[1]));
}

double floor_var(double p) { return std::isfinite(p) ? std::max(kPMin, p) : kPMin; }

void kalman_update(GaussianState& s, double y, double r) {
  const double k = s.var / (s.var + r);
  s.mean += k * (y - s.mean);
  s.var = floor_var((1.0 - k) * s.var);
}

void ekf_predict(GaussianState& s, const FilterConfig& cfg, double q, double dt, double* f2p = nullptr) {
  const Propagation pr = propagate(cfg.assumed_params, s.mean, dt, cfg.model_substeps, state_bound(cfg));
  const double spread = pr.jacobian * pr.jacobian * s.var;
  if (f2p) *f2p = spread;
  s.mean = pr.x;
  s.var = spread + q;
}

StepInfo penalized_update(GaussianState& s, double y, const FilterConfig& cfg,
                          const LandscapeSummary& land) {
  CostContext ctx;
  ctx.x_pred = s.mean;
  ctx.p_pred = std::max(kPMin, s.var);
  ctx.y = y;
  ctx.gp = cfg.gp;
  ctx.params = cfg.assumed_params;
  ctx.summary = land;
  const double k = ctx.p_pred / (ctx.p_pred + cfg.gp.r0);
  const double x_init = ctx.x_pred + k * (y - ctx.x_pred);
  StepInfo info;
  const MinimizeResult mr = minimize_cost(ctx, x_init, default_halfwidth(ctx));
  info.max_iter = !mr.converged;
  s.mean = mr.x_star;
  s.var = hessian_covariance(ctx, mr.x_star);
  return info;
}

double weighted_stats(const std::vector<double>& x, const std::vector<double>& w, double& var) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0) m += w[i] * x[i];
  }
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0) v += w[i] * (x[i] - m) * (x[i] - m);
  }
  var = v;
  return m;
}

double sample_stats(const std::vector<double>& x, double& var) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double v = 0.0;
  for (double xi : x) v += (xi - m) * (xi - m);
  var = v / (n - 1.0);
  return m;
}

}  // namespace

std::string display_name(FilterKind k) { return info(k).name; }
std::string token(FilterKind k) { return info(k).token; }

FilterKind filter_kind_from_string(const std::string& s) {
  for (const auto& i : kKinds) {
    if (s == i.token || s == i.name) return i.kind;
  }
  throw ConfigError("unknown filter kind '" + s + "'");
}

bool is_gated(FilterKind k) noexcept {
  switch (k) {
    case FilterKind::PgEkf:
    case FilterKind::NtEkf:
    case FilterKind::PgUkf:
    case FilterKind::PgAkf:
    case FilterKind::PgEnkf:
    case FilterKind::PgPf:
      return true;
    default:
      return false;
  }
}

bool is_stochastic(FilterKind k) noexcept {
  return k == FilterKind::EnkfStd || k == FilterKind::PgEnkf || k == FilterKind::PfStd ||
         k == FilterKind::PgPf;
}

FilterKind standard_counterpart(FilterKind k) noexcept {
  switch (k) {
    case FilterKind::PgEkf:
    case FilterKind::NtEkf:
      return FilterKind::EkfStd;
    case FilterKind::PgUkf:
      return FilterKind::UkfStd;
    case FilterKind::PgAkf:
      return FilterKind::AkfStd;
    case FilterKind::PgEnkf:
      return FilterKind::EnkfStd;
    case FilterKind::PgPf:
      return FilterKind::PfStd;
    default:
      return k;
  }
}

FilterConfig FilterConfig::normalized() const {
  FilterConfig c = *this;
  if (!is_gated(kind)) {
    c.gp.g = 0.0;
    c.gp.lambda = 0.0;
  }
  c.assumed_params.validate();
  if (!(c.gp.r0 > 0.0)) throw ConfigError("r0 must be > 0");
  if (!(c.gp.g >= 0.0) || !(c.gp.lambda >= 0.0)) throw ConfigError("g and lambda must be >= 0");
  if (!(c.q > 0.0)) throw ConfigError("q must be > 0");
  if (!(c.x0_var > 0.0)) throw ConfigError("x0_var must be > 0");
  if (c.n_particles < 2) throw ConfigError("n_particles must be >= 2");
  if (c.n_ensemble < 2) throw ConfigError("n_ensemble must be >= 2");
  if (c.model_substeps == 0) throw ConfigError("model_substeps must be >= 1");
  if (!(c.state_bound_factor > 1.0)) throw ConfigError("state_bound_factor must be > 1");
  return c;
}

Propagation propagate(const PotentialParams& p, double x, double dt, std::size_t substeps,
                      double bound) noexcept {
  const double h = dt / static_cast<double>(substeps);
  Propagation pr{x, 1.0, false};
  for (std::size_t i = 0; i < substeps; ++i) {
    const double prev = pr.x;
    pr.jacobian *= 1.0 + drift_slope(p, pr.x) * h;
    pr.x += drift(p, pr.x) * h;
    if (std::isnan(pr.x)) pr.x = std::copysign(bound, prev);
    if (std::abs(pr.x) > bound) {
      pr.x = std::copysign(bound, pr.x);
      pr.clamped = true;
    }
    if (!(std::abs(pr.jacobian) <= kMaxJacobian)) {
      pr.jacobian = std::isnan(pr.jacobian) ? kMaxJacobian : std::copysign(kMaxJacobian, pr.jacobian);
    }
  }
  return pr;
}

StepInfo ekf_step(GaussianState& s, double y, const FilterConfig& cfg, double dt, bool predict) {
  if (predict) ekf_predict(s, cfg, cfg.q, dt);
  kalman_update(s, y, cfg.gp.r0);
  return {};
}

StepInfo pg_update_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                        double dt, bool predict) {
  if (predict) ekf_predict(s, cfg, cfg.q, dt);
  return penalized_update(s, y, cfg, land);
}

StepInfo nt_ekf_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                     double dt, bool predict) {
  if (predict) ekf_predict(s, cfg, cfg.q, dt);
  kalman_update(s, y, naive_r(cfg.gp, land, s.mean));
  return {};
}

StepInfo robust_ekf_step(GaussianState& s, double y, const FilterConfig& cfg, double dt, bool predict) {
  if (predict) ekf_predict(s, cfg, cfg.q, dt);
  const double nu = y - s.mean;
  const double nis = nu * nu / (s.var + cfg.gp.r0);
  StepInfo info;
  if (nis > kRobustChi2Threshold) {
    info.aux = 1.0;
    s.var = floor_var(s.var);
    return info;
  }
  kalman_update(s, y, cfg.gp.r0);
  return info;
}

GaussianState unscented_predict(const GaussianState& s, const FilterConfig& cfg, double dt, bool& collapsed) {
  // Scalar UT with kappa = 2: weights 2/3 (centre) and 1/6 (each side).
  constexpr double kW0 = 2.0 / 3.0;
  constexpr double kW1 = 1.0 / 6.0;
  const double spread = std::sqrt(3.0 * s.var);
  const double b = state_bound(cfg);
  const double c = propagate(cfg.assumed_params, s.mean, dt, cfg.model_substeps, b).x;
  const double l = propagate(cfg.assumed_params, s.mean - spread, dt, cfg.model_substeps, b).x;
  const double r = propagate(cfg.assumed_params, s.mean + spread, dt, cfg.model_substeps, b).x;
  GaussianState out;
  out.mean = kW0 * c + kW1 * (l + r);
  out.var = kW0 * (c - out.mean) * (c - out.mean) + kW1 * (l - out.mean) * (l - out.mean) +
            kW1 * (r - out.mean) * (r - out.mean) + cfg.q;
  collapsed = !(out.var >= kPMin);
  if (collapsed) out.var = kPMin;
  return out;
}

StepInfo ukf_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                  double dt, bool predict) {
  bool collapsed = false;
  if (predict) s = unscented_predict(s, cfg, dt, collapsed);
  StepInfo info;
  if (cfg.kind == FilterKind::PgUkf) {
    info = penalized_update(s, y, cfg, land);
  } else {
    // Linear observation: the unscented update coincides with the Kalman update.
    kalman_update(s, y, cfg.gp.r0);
  }
  info.collapse = collapsed;
  return info;
}

StepInfo akf_step(AkfState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land, double dt,
                  bool predict) {
  double f2p = s.g.var;
  if (predict) ekf_predict(s.g, cfg, s.q, dt, &f2p);
  const double nu = y - s.g.mean;
  if (predict) {
    s.window.emplace_back(nu * nu, f2p);
    if (s.window.size() > kAkfWindow) s.window.pop_front();
  }
  const double r = cfg.kind == FilterKind::PgAkf
                       ? gated_r(cfg.gp, gating_potential(cfg.assumed_params, land, s.g.mean))
                       : cfg.gp.r0;
  kalman_update(s.g, y, r);
  if (s.window.size() == kAkfWindow) {
    double c_nu = 0.0;
    double c_p = 0.0;
    for (const auto& [n2, p] : s.window) {
      c_nu += n2;
      c_p += p;
    }
    const double n = static_cast<double>(kAkfWindow);
    s.q = std::clamp(c_nu / n - cfg.gp.r0 - c_p / n, kAkfQMin, kAkfQMax);
  }
  return {s.q, false, false};
}

StepInfo enkf_step(EnsembleState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                   double dt, GaussianState& out, bool predict) {
  const double sq = std::sqrt(cfg.q);
  if (predict) {
    const double b = state_bound(cfg);
    for (double& m : s.members) {
      m = propagate(cfg.assumed_params, m, dt, cfg.model_substeps, b).x + sq * s.rng.normal();
    }
  }
  StepInfo info;
  double pf = 0.0;
  double mf = sample_stats(s.members, pf);
  if (!(pf >= kEnsembleCollapseVar) || !std::isfinite(mf)) {
    if (!std::isfinite(mf)) mf = y;
    const double sd = std::sqrt(kPMin);
    for (double& m : s.members) m = mf + sd * s.rng.normal();
    mf = sample_stats(s.members, pf);
    info.collapse = true;
  }
  const double r = cfg.kind == FilterKind::PgEnkf
                       ? gated_r(cfg.gp, gating_potential(cfg.assumed_params, land, mf))
                       : cfg.gp.r0;
  const double k = pf / (pf + r);
  const double sr = std::sqrt(r);
  for (double& m : s.members) {
    const double yi = y + sr * s.rng.normal();
    m += k * (yi - m);
  }
  double pa = 0.0;
  out.mean = sample_stats(s.members, pa);
  out.var = floor_var(pa);
  return info;
}

void systematic_resample(ParticleState& s) {
  const std::size_t n = s.particles.size();
  const double u0 = s.rng.uniform() / static_cast<double>(n);
  std::vector<double> next(n);
  double cum = s.weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (u > cum && j + 1 < n) cum += s.weights[++j];
    next[i] = s.particles[j];
  }
  s.particles = std::move(next);
  std::fill(s.weights.begin(), s.weights.end(), 1.0 / static_cast<double>(n));
}

StepInfo pf_step(ParticleState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                 double dt, GaussianState& out, bool predict) {
  const std::size_t n = s.particles.size();
  const double sq = std::sqrt(cfg.q);
  if (predict) {
    const double b = state_bound(cfg);
    for (double& p : s.particles) {
      p = propagate(cfg.assumed_params, p, dt, cfg.model_substeps, b).x + sq * s.rng.normal();
    }
  }
  const bool gated = cfg.kind == FilterKind::PgPf;
  std::vector<double> logw(n);
  double max_lw = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.particles[i];
    if (!std::isfinite(x) || !(s.weights[i] > 0.0)) {
      logw[i] = -INFINITY;
      continue;
    }
    const double r = gated ? gated_r(cfg.gp, gating_potential(cfg.assumed_params, land, x)) : cfg.gp.r0;
    const double d = y - x;
    logw[i] = std::log(s.weights[i]) - 0.5 * d * d / r - 0.5 * std::log(r);
    max_lw = std::max(max_lw, logw[i]);
  }
  StepInfo info;
  double total = 0.0;
  if (std::isfinite(max_lw)) {
    for (std::size_t i = 0; i < n; ++i) {
      s.weights[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - max_lw) : 0.0;
      total += s.weights[i];
    }
  }
  if (!(total > 0.0)) {
    // Every particle lost: restart the cloud around the observation.
    info.collapse = true;
    const double sd = std::sqrt(cfg.gp.r0);
    for (double& p : s.particles) {
      if (!std::isfinite(p)) p = y + sd * s.rng.normal();
    }
    std::fill(s.weights.begin(), s.weights.end(), 1.0 / static_cast<double>(n));
  } else {
    for (double& w : s.weights) w /= total;
  }
  double var = 0.0;
  out.mean = weighted_stats(s.particles, s.weights, var);
  out.var = floor_var(var);
  double sum_sq = 0.0;
  for (double w : s.weights) sum_sq += w * w;
  info.aux = 1.0 / sum_sq;
  if (info.aux < 0.5 * static_cast<double>(n)) systematic_resample(s);
  return info;
}

EstimateTrace run_filter(const FilterConfig& raw_cfg, std::span<const double> obs, double dt) {
  if (obs.empty()) throw ConfigError("run_filter requires at least one observation");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  const FilterConfig cfg = raw_cfg.normalized();
  const LandscapeSummary land = landscape(cfg.assumed_params);
  const double m0 = cfg.x0_mean.value_or(obs[0]);

  EstimateTrace tr;
  tr.mean.reserve(obs.size());
  tr.variance.reserve(obs.size());

  auto record = [&](const GaussianState& g, const StepInfo& info) {
    tr.mean.push_back(g.mean);
    tr.variance.push_back(floor_var(g.var));
    if (tr.aux_kind != AuxKind::None) tr.aux.push_back(info.aux);
    tr.max_iter_hits += info.max_iter ? 1 : 0;
    tr.collapses += info.collapse ? 1 : 0;
  };

  switch (cfg.kind) {
    case FilterKind::EkfStd:
    case FilterKind::PgEkf:
    case FilterKind::NtEkf:
    case FilterKind::EkfRobust:
    case FilterKind::UkfStd:
    case FilterKind::PgUkf: {
      if (cfg.kind == FilterKind::EkfRobust) tr.aux_kind = AuxKind::Rejected;
      GaussianState s{m0, cfg.x0_var};
      for (std::size_t k = 0; k < obs.size(); ++k) {
        const bool pred = k > 0;
        StepInfo info;
        switch (cfg.kind) {
          case FilterKind::EkfStd: info = ekf_step(s, obs[k], cfg, dt, pred); break;
          case FilterKind::PgEkf: info = pg_update_step(s, obs[k], cfg, land, dt, pred); break;
          case FilterKind::NtEkf: info = nt_ekf_step(s, obs[k], cfg, land, dt, pred); break;
          case FilterKind::EkfRobust: info = robust_ekf_step(s, obs[k], cfg, dt, pred); break;
          default: info = ukf_step(s, obs[k], cfg, land, dt, pred); break;
        }
        record(s, info);
      }
      break;
    }
    case FilterKind::AkfStd:
    case FilterKind::PgAkf: {
      tr.aux_kind = AuxKind::QAdapt;
      AkfState s{{m0, cfg.x0_var}, cfg.q, {}};
      for (std::size_t k = 0; k < obs.size(); ++k) {
        const StepInfo info = akf_step(s, obs[k], cfg, land, dt, k > 0);
        record(s.g, info);
      }
      break;
    }
    case FilterKind::EnkfStd:
    case FilterKind::PgEnkf: {
      EnsembleState s{std::vector<double>(cfg.n_ensemble), Rng(cfg.seed)};
      const double sd = std::sqrt(cfg.x0_var);
      for (double& m : s.members) m = m0 + sd * s.rng.normal();
      for (std::size_t k = 0; k < obs.size(); ++k) {
        GaussianState g;
        const StepInfo info = enkf_step(s, obs[k], cfg, land, dt, g, k > 0);
        record(g, info);
      }
      break;
    }
    case FilterKind::PfStd:
    case FilterKind::PgPf: {
      tr.aux_kind = AuxKind::Ess;
      const std::size_t n = cfg.n_particles;
      ParticleState s{std::vector<double>(n), std::vector<double>(n, 1.0 / static_cast<double>(n)),
                      Rng(cfg.seed)};
      const double sd = std::sqrt(cfg.x0_var);
      for (double& p : s.particles) p = m0 + sd * s.rng.normal();
      for (std::size_t k = 0; k < obs.size(); ++k) {
        GaussianState g;
        const StepInfo info = pf_step(s, obs[k], cfg, land, dt, g, k > 0);
        tr.weight_underflows += info.collapse ? 1 : 0;
        record(g, {info.aux, false, false});
      }
      break;
    }
  }
  return tr;
}

}  // namespace pgate
