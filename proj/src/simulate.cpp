#include "pgate/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "pgate/errors.hpp"
#include "pgate/rng.hpp"

namespace pgate {

namespace {
constexpr std::uint64_t kProcessStream = 0;
constexpr std::uint64_t kObservationStream = 1;

double max_well_curvature(const PotentialParams& p, const LandscapeSummary& s) {
  return std::max(v_second(p, s.wells[0]), v_second(p, s.wells[1]));
}
}  // namespace

std::string to_string(SimMode m) { return m == SimMode::Forced ? "forced" : "kramers"; }

SimMode sim_mode_from_string(const std::string& s) {
  if (s == "forced") return SimMode::Forced;
  if (s == "kramers") return SimMode::Kramers;
  throw ConfigError("unknown simulation mode '" + s + "'");
}

std::vector<std::size_t> ForcingSchedule::resolved_epochs(std::size_t n_steps) const {
  if (!epochs.empty()) return epochs;
  return {n_steps / 3, 2 * n_steps / 3};
}

std::size_t SimConfig::resolved_substeps() const {
  if (substeps > 0) return substeps;
  const double curv = max_well_curvature(params, landscape(params));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt * curv / kAutoStepCourant)));
}

void SimConfig::validate() const {
  params.validate();
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (n_steps == 0) throw ConfigError("n_steps must be positive");
  if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0)) {
    throw ConfigError("outlier_prob must lie in [0, 1]");
  }
  if (!(outlier_scale > 0.0)) throw ConfigError("outlier_scale must be > 0");
  if (!(r0 > 0.0)) throw ConfigError("r0 must be > 0");
  if (!std::isfinite(x0)) throw ConfigError("x0 must be finite");
  const double h = dt / static_cast<double>(resolved_substeps());
  const double curv = max_well_curvature(params, landscape(params));
  if (!(h * curv < 2.0)) {
    throw ConfigError("Euler step unstable: h * max|f'(well)| = " + std::to_string(h * curv) +
                      " must be < 2 (raise substeps)");
  }
}

std::vector<double> simulate_process(const SimConfig& cfg) {
  cfg.validate();
  const LandscapeSummary land = landscape(cfg.params);
  const double limit = 10.0 * std::max(std::abs(land.wells[0]), std::abs(land.wells[1]));
  const std::size_t n_sub = cfg.resolved_substeps();
  const double h = cfg.dt / static_cast<double>(n_sub);
  const double noise = cfg.sigma * std::sqrt(h);

  std::vector<std::size_t> epochs;
  double push = 0.0;
  if (cfg.mode == SimMode::Forced) {
    epochs = cfg.forcing.resolved_epochs(cfg.n_steps);
    push = cfg.forcing.amplitude_factor * land.barrier_height / (land.wells[1] - land.wells[0]);
  }

  Rng rng(derive_seed(cfg.seed, kProcessStream));
  std::vector<double> x(cfg.n_steps);
  x[0] = cfg.x0;
  double force = 0.0;
  std::size_t force_left = 0;
  for (std::size_t k = 0; k + 1 < cfg.n_steps; ++k) {
    if (std::find(epochs.begin(), epochs.end(), k) != epochs.end()) {
      force = x[k] < land.barrier_x ? push : -push;
      force_left = cfg.forcing.duration;
    }
    const double applied = force_left > 0 ? force : 0.0;
    if (force_left > 0) --force_left;

    double xi = x[k];
    for (std::size_t s = 0; s < n_sub; ++s) {
      xi += (drift(cfg.params, xi) + applied) * h + noise * rng.normal();
    }
    if (!std::isfinite(xi) || std::abs(xi) > limit) {
      throw DivergenceError("state left |x| <= " + std::to_string(limit) + " at step " +
                            std::to_string(k + 1));
    }
    x[k + 1] = xi;
  }
  return x;
}

Observations observe(const std::vector<double>& truth, const SimConfig& cfg) {
  if (truth.empty()) throw ConfigError("observe requires a nonempty truth sequence");
  Rng rng(derive_seed(cfg.seed, kObservationStream));
  const double clean_sd = std::sqrt(cfg.r0);
  const double outlier_sd = std::sqrt(cfg.r0 + cfg.outlier_scale * cfg.r0);
  Observations out;
  out.obs.resize(truth.size());
  out.outlier_flags.resize(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const bool outlier = rng.bernoulli(cfg.outlier_prob);
    out.outlier_flags[k] = outlier;
    out.obs[k] = truth[k] + (outlier ? outlier_sd : clean_sd) * rng.normal();
  }
  return out;
}

std::size_t count_zero_crossings(const std::vector<double>& x) noexcept {
  std::size_t n = 0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    if ((x[k - 1] < 0.0 && x[k] > 0.0) || (x[k - 1] > 0.0 && x[k] < 0.0)) ++n;
  }
  return n;
}

Trajectory simulate(const SimConfig& cfg) {
  Trajectory t;
  t.truth = simulate_process(cfg);
  auto o = observe(t.truth, cfg);
  t.obs = std::move(o.obs);
  t.outlier_flags = std::move(o.outlier_flags);
  t.seed = cfg.seed;
  t.n_crossings = count_zero_crossings(t.truth);
  return t;
}

std::optional<Trajectory> simulate_kramers(const SimConfig& cfg, std::size_t min_crossings) {
  if (cfg.mode != SimMode::Kramers) throw ConfigError("simulate_kramers requires Kramers mode");
  Trajectory t = simulate(cfg);
  if (t.n_crossings < min_crossings) return std::nullopt;
  return t;
}

}  // namespace pgate
