#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgate/potential.hpp"
#include "pgate/rng.hpp"
#include "pgate/scalar_opt.hpp"

namespace pgate {

enum class FilterKind {
  EkfStd,
  PgEkf,
  NtEkf,
  EkfRobust,
  UkfStd,
  PgUkf,
  AkfStd,
  PgAkf,
  EnkfStd,
  PgEnkf,
  PfStd,
  PgPf,
};

inline constexpr FilterKind kAllFilterKinds[] = {
    FilterKind::EkfStd,  FilterKind::PgEkf,  FilterKind::NtEkf,   FilterKind::EkfRobust,
    FilterKind::UkfStd,  FilterKind::PgUkf,  FilterKind::AkfStd,  FilterKind::PgAkf,
    FilterKind::EnkfStd, FilterKind::PgEnkf, FilterKind::PfStd,   FilterKind::PgPf,
};

/// Display name, e.g. "PG-EKF".
std::string display_name(FilterKind k);
/// Config token, e.g. "pg_ekf".
std::string token(FilterKind k);
FilterKind filter_kind_from_string(const std::string& s);

bool is_gated(FilterKind k) noexcept;
bool is_stochastic(FilterKind k) noexcept;
/// Standard counterpart of a gated kind (NtEkf maps to EkfStd); identity otherwise.
FilterKind standard_counterpart(FilterKind k) noexcept;

inline constexpr double kRobustChi2Threshold = 6.635;  // chi-square(1) 0.99 quantile
inline constexpr std::size_t kAkfWindow = 30;
inline constexpr double kAkfQMin = 1e-6;
inline constexpr double kAkfQMax = 10.0;
inline constexpr double kEnsembleCollapseVar = 1e-10;

struct FilterConfig {
  FilterKind kind = FilterKind::EkfStd;
  GatingParams gp;
  double q = 0.09;
  PotentialParams assumed_params;
  std::size_t n_particles = 500;
  std::size_t n_ensemble = 50;
  std::optional<double> x0_mean;  // nullopt: first observation
  double x0_var = 1.0;
  std::uint64_t seed = 0;
  /// Euler sub-steps used by the filter's process model over one dt.
  std::size_t model_substeps = 1;
  /// Propagated states are clamped to +-state_bound_factor * max|well|.
  double state_bound_factor = 2.0;

  /// Copy with g = lambda = 0 forced for non-gated kinds; validates fields.
  FilterConfig normalized() const;
};

/// Which per-step diagnostic fills EstimateTrace::aux.
enum class AuxKind { None, Ess, QAdapt, Rejected };

struct EstimateTrace {
  std::vector<double> mean;
  std::vector<double> variance;
  AuxKind aux_kind = AuxKind::None;
  std::vector<double> aux;
  std::size_t max_iter_hits = 0;       // penalized update hit the iteration cap
  std::size_t weight_underflows = 0;   // PF weights all zero, reset to uniform
  std::size_t collapses = 0;           // EnKF or UT variance re-inflated
};

/// Mean and variance of a Gaussian-summarized filter.
struct GaussianState {
  double mean = 0.0;
  double var = 1.0;
};

struct StepInfo {
  double aux = 0.0;
  bool max_iter = false;
  bool collapse = false;
};

/// Euler drift map x -> x + f(x) h applied model_substeps times, with its
/// derivative. States leaving [-bound, bound] (or turning non-finite) are
/// clamped and flagged; the derivative magnitude is capped at kMaxJacobian.
struct Propagation {
  double x = 0.0;
  double jacobian = 1.0;
  bool clamped = false;
};
inline constexpr double kMaxJacobian = 1e6;
Propagation propagate(const PotentialParams& p, double x, double dt, std::size_t substeps,
                      double bound = std::numeric_limits<double>::infinity()) noexcept;

// Gaussian-family steps: predict (skipped when predict == false), then update.
StepInfo ekf_step(GaussianState& s, double y, const FilterConfig& cfg, double dt, bool predict = true);
StepInfo pg_update_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                        double dt, bool predict = true);
StepInfo nt_ekf_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                     double dt, bool predict = true);
StepInfo robust_ekf_step(GaussianState& s, double y, const FilterConfig& cfg, double dt,
                         bool predict = true);
/// Handles both UkfStd and PgUkf (selected by cfg.kind).
StepInfo ukf_step(GaussianState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                  double dt, bool predict = true);

/// Unscented prediction with three symmetric sigma points at m +/- sqrt(3P).
GaussianState unscented_predict(const GaussianState& s, const FilterConfig& cfg, double dt, bool& collapsed);

struct AkfState {
  GaussianState g;
  double q = 0.09;
  std::deque<std::pair<double, double>> window;  // (innovation^2, F^2 P)
};
/// Handles AkfStd and PgAkf.
StepInfo akf_step(AkfState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land, double dt,
                  bool predict = true);

struct EnsembleState {
  std::vector<double> members;
  Rng rng{0};
};
/// Handles EnkfStd and PgEnkf. Writes the posterior ensemble mean/variance to out.
StepInfo enkf_step(EnsembleState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                   double dt, GaussianState& out, bool predict = true);

struct ParticleState {
  std::vector<double> particles;
  std::vector<double> weights;
  Rng rng{0};
};
/// Handles PfStd and PgPf. aux is the effective sample size before resampling.
StepInfo pf_step(ParticleState& s, double y, const FilterConfig& cfg, const LandscapeSummary& land,
                 double dt, GaussianState& out, bool predict = true);

/// Systematic resampling with a single uniform offset; weights reset to 1/N.
void systematic_resample(ParticleState& s);

/// Runs the configured filter over obs. Deterministic given cfg.seed.
EstimateTrace run_filter(const FilterConfig& cfg, std::span<const double> obs, double dt);

}  // namespace pgate
