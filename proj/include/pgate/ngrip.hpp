#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pgate/potential.hpp"
#include "pgate/stats.hpp"

namespace pgate {

/// Proxy time series (age in years, value in per mil). Age must be strictly
/// monotone in either direction.
struct ProxyRecord {
  std::vector<double> age;
  std::vector<double> value;
  std::string source_id;

  void validate() const;
};

struct EventOnset {
  std::string event_id;
  double onset_age = 0.0;
};

inline constexpr std::size_t kDefaultSegmentLength = 226;
inline constexpr std::size_t kMinSegmentLength = 30;

struct EventRecord {
  std::string event_id;
  std::vector<double> segment;  // normalized, modes near +-1
  double gamma_hat = 0.0;
  double norm_midpoint = 0.0;
  double norm_scale = 1.0;
};

/// `age,value` CSV with an optional header row.
ProxyRecord load_proxy_csv(const std::filesystem::path& path);
ProxyRecord parse_proxy_csv(const std::string& text, const std::string& source_id);
/// `event_id,onset_age` CSV with an optional header row.
std::vector<EventOnset> load_events_csv(const std::filesystem::path& path);
std::vector<EventOnset> parse_events_csv(const std::string& text);

/// Window of `length` consecutive samples centred on the sample nearest each
/// onset, clipped to the record. Throws ConfigError when the record is
/// shorter than `length` or two windows overlap.
std::vector<std::vector<double>> segment_events(const ProxyRecord& rec, const std::vector<EventOnset>& events,
                                                std::size_t length = kDefaultSegmentLength);

struct Normalization {
  std::vector<double> normalized;
  double midpoint = 0.0;
  double scale = 1.0;
};

/// Affine map placing the two most prominent KDE modes at -1 and +1.
/// Throws UnimodalSegment when fewer than two peaks pass the prominence test.
Normalization normalize_bimodal(std::span<const double> segment);

/// Mean squared one-step increment over two.
double estimate_t_eff(std::span<const double> normalized);

inline constexpr double kGammaSearchLimit = 1.0;
inline constexpr double kFitTempMin = 0.01;
inline constexpr double kFitTempMax = 5.0;
inline constexpr std::size_t kFitQuadraturePoints = 256;

/// Fits gamma of V = -x^2/2 + x^4/4 - gamma x to the Boltzmann-inverted KDE of a
/// normalized segment, density-weighted over the grid where the density
/// exceeds the floor. The model density exp(-V/t) is smoothed with the same
/// kernel; t and the vertical offset are profiled out at each trial gamma and
/// gamma itself is a bounded 1-D search on [-kGammaSearchLimit, kGammaSearchLimit].
double fit_gamma(std::span<const double> normalized);

struct BoltzmannValidation {
  std::vector<double> x;
  std::vector<double> v_emp;    // shifted to min 0
  std::vector<double> v_model;  // shifted to min 0 over the same support
  std::vector<double> weight;   // empirical density
  double weighted_r2 = 0.0;
};

/// V_emp = -t_eff ln(density) versus the GL potential on the supported grid.
BoltzmannValidation boltzmann_validate(std::span<const double> normalized, const PotentialParams& params,
                                       double t_eff);

struct GammaSignificance {
  std::size_t n = 0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  TTestResult t_test;
  WilcoxonResult wilcoxon;
  SignTestResult sign;
  Interval bootstrap_median;
};

inline constexpr std::size_t kGammaBootstrapResamples = 10000;

GammaSignificance gamma_significance(std::span<const double> gammas, std::uint64_t seed,
                                     std::size_t n_boot = kGammaBootstrapResamples);

/// Normalizes every segment and fits its gamma.
std::vector<EventRecord> build_events(const ProxyRecord& rec, const std::vector<EventOnset>& onsets,
                                      std::size_t length = kDefaultSegmentLength);

/// ceil(n / stride) samples at rounded, evenly spaced indices from first to
/// last, so both endpoints survive and the spacing is stride where it divides.
std::vector<double> stride_subsample(std::span<const double> x, std::size_t stride);

/// Adds N(0, r_out) to each sample with probability p. With p = 0 the input is
/// returned unchanged and no random numbers are drawn.
std::vector<double> contaminate(std::span<const double> truth, double p, double r_out, std::uint64_t seed);

struct NgripBenchConfig {
  std::vector<std::size_t> strides{1, 2, 3, 4, 5};
  std::vector<double> outlier_fracs{0.0, 0.02, 0.05, 0.10, 0.15};
  std::size_t n_reps = 20;
  GatingParams gp;
  double q = 0.09;
  double outlier_scale = 100.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct NgripCell {
  std::size_t stride = 1;
  std::size_t length = 0;
  double outlier_frac = 0.0;
  double improvement_mean = 0.0;  // PG-EKF over EKF Std, percent
  double improvement_se = 0.0;
  double rmse_std = 0.0;
  double rmse_pg = 0.0;
};

struct NgripBenchResult {
  std::vector<NgripCell> cells;                     // stride-major
  std::vector<std::vector<double>> improvement;     // [stride][frac]
  AnovaResult anova;                                // A = length, B = outlier fraction
  double pf_clean_improvement = 0.0;                // PG-PF over PF Std at stride 1, p = 0
};

/// Contamination sweep: ground truth is each clean normalized segment,
/// observations add outliers only. Per replication the improvement is taken
/// on event-averaged RMSE.
NgripBenchResult run_ngrip_benchmark(const std::vector<EventRecord>& events, const NgripBenchConfig& cfg);

struct SyntheticNgrip {
  ProxyRecord record;
  std::vector<EventOnset> onsets;
};

struct SyntheticNgripConfig {
  std::size_t n_events = 19;
  std::size_t samples_per_event = kDefaultSegmentLength;
  double gamma = -0.109;
  double sigma = 0.45;
  double sample_dt = 32.0;
  double integration_step = 0.05;  // fine enough that the Euler stationary density matches Boltzmann
  double value_midpoint = -40.0;
  double value_scale = 3.0;
  double age_step = 20.0;
  std::uint64_t seed = 2024;
};

inline constexpr std::size_t kFixtureMaxAttempts = 200;

/// NGRIP-like record built from the asymmetric GL model: each event block is
/// a sampled Langevin path, mapped affinely to per-mil values. Blocks that
/// fail the bimodality test are redrawn from the next derived seed.
SyntheticNgrip make_synthetic_ngrip(const SyntheticNgripConfig& cfg = {});

}  // namespace pgate
