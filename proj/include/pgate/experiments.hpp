#pragma once

#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

#include "pgate/filters.hpp"
#include "pgate/simulate.hpp"
#include "pgate/stats.hpp"

namespace pgate {

/// Shared knobs of every synthetic study: the simulation template, the filter
/// template (kind is overwritten per run), the kinds to run, replication count
/// and base seed.
struct ExperimentSettings {
  SimConfig sim;
  FilterConfig filter;
  std::vector<FilterKind> kinds{std::begin(kAllFilterKinds), std::end(kAllFilterKinds)};
  std::size_t n_reps = 100;
  std::uint64_t base_seed = 42;
  std::size_t threads = 1;
};

/// Seed of replication k.
std::uint64_t replication_seed(std::uint64_t base, std::size_t k) noexcept;
/// Filter seed within a replication. Gated kinds share their standard
/// counterpart's stream so the g = lambda = 0 reduction holds end to end.
std::uint64_t filter_seed(std::uint64_t rep_seed, FilterKind kind) noexcept;

/// RMSE of each requested kind on one trajectory. A filter that throws or
/// returns a non-finite estimate yields NaN.
std::vector<double> run_filters_on(const Trajectory& traj, const ExperimentSettings& s,
                                   const std::vector<FilterKind>& kinds, std::uint64_t rep_seed);

struct BenchmarkResult {
  std::vector<FilterKind> kinds;
  std::vector<std::vector<double>> rmse;  // [kind][rep], NaN for failures
  std::vector<BenchmarkRow> rows;         // same order as kinds
  std::size_t sim_failures = 0;
};

/// Rows from a per-kind RMSE matrix; failed replications count towards
/// BenchmarkRow::failures and are dropped pairwise against the baseline.
std::vector<BenchmarkRow> aggregate_rows(const std::vector<FilterKind>& kinds,
                                         const std::vector<std::vector<double>>& rmse, FilterKind baseline);

BenchmarkResult run_benchmark(const ExperimentSettings& s);

struct GoldilocksResult {
  std::vector<double> g_values;
  std::vector<double> alphas;
  double lambda = 0.5;
  std::vector<double> barrier_heights;         // per alpha
  std::vector<std::vector<double>> rmse;        // [alpha][g], mean PG-EKF RMSE
  std::vector<double> ekf_std_rmse;            // per alpha
  std::vector<double> best_g;                  // per alpha
  std::vector<std::vector<double>> degradation_pct;  // [alpha][g] vs the per-alpha optimum
};

GoldilocksResult run_goldilocks(const ExperimentSettings& s, const std::vector<double>& g_values,
                                const std::vector<double>& alphas, double lambda);

struct MisspecResult {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<std::vector<double>> rmse_pg;      // [alpha][beta]
  std::vector<std::vector<double>> rmse_std;     // [alpha][beta]
  std::vector<std::vector<double>> improvement;  // [alpha][beta], percent
};

/// Truth keeps s.sim.params; only the filters' assumed parameters vary.
MisspecResult run_misspec(const ExperimentSettings& s, const std::vector<double>& alphas,
                          const std::vector<double>& betas);

struct KramersArmSettings {
  std::size_t forced_n_steps = 300;
  std::size_t forced_reps = 20;
  double kramers_sigma = 0.5;
  std::size_t kramers_n_steps = 2000;
  std::size_t kramers_reps = 20;
  std::size_t min_crossings = 2;
  std::size_t min_accepted = 3;
  std::size_t oversampling = 10;
};

struct KramersArm {
  std::string mode;
  std::size_t attempted = 0;
  std::size_t accepted = 0;
  std::vector<BenchmarkRow> rows;  // EKF Std, PG-EKF, NT-EKF
};

struct KramersResult {
  KramersArm forced;
  KramersArm kramers;
};

/// Forced arm and spontaneous arm on their own settings. The spontaneous arm
/// attempts kramers_reps seeds and keeps those with enough crossings; when
/// fewer than min_accepted survive it keeps drawing up to oversampling times
/// kramers_reps seeds, then throws InsufficientCrossings.
KramersResult run_kramers(const ExperimentSettings& s, const KramersArmSettings& k);

struct ScarcityResult {
  std::vector<std::size_t> lengths;
  std::vector<double> probs;
  std::vector<std::vector<double>> improvement;  // [prob][length], percent
};

ScarcityResult run_scarcity(const ExperimentSettings& s, const std::vector<std::size_t>& lengths,
                            const std::vector<double>& probs);

}  // namespace pgate
