#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pgate {

double rmse(std::span<const double> est, std::span<const double> truth);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double stddev(std::span<const double> x);
double median(std::span<const double> x);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  std::size_t n = 0;       // after dropping zero differences
  double p_value = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactMaxN = 15;

/// Paired two-sided signed-rank test of a - b. Zero differences are dropped,
/// ties get average ranks. Exact null distribution for n <= 15, otherwise the
/// tie- and continuity-corrected normal approximation.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);
/// One-sample form: differences x - mu0.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, double mu0);

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};
TTestResult t_test_one_sample(std::span<const double> x, double mu0);

struct SignTestResult {
  std::size_t k_neg = 0;
  std::size_t n = 0;
  double p_value = 1.0;
};
/// Two-sided exact binomial test on the signs of x - mu0 (exact ties dropped).
SignTestResult sign_test(std::span<const double> x, double mu0);
/// Two-sided exact binomial p for k successes out of n at probability 1/2.
double sign_test_p(std::size_t k, std::size_t n);

using Estimator = std::function<double(std::span<const double>)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap. Resample b draws from Rng(derive_seed(seed, b)), so
/// the interval is fixed by the seed regardless of evaluation order.
Interval bootstrap_ci(std::span<const double> x, const Estimator& stat, std::size_t n_boot, double level,
                      std::uint64_t seed);

/// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(std::span<const double> sorted, double q);

struct AnovaResult {
  double pct_var_a = 0.0;
  double pct_var_b = 0.0;
  double pct_var_resid = 0.0;
  double f_a = 0.0;
  double f_b = 0.0;
  double p_a = 1.0;
  double p_b = 1.0;
  std::size_t df_a = 0;
  std::size_t df_b = 0;
  std::size_t df_resid = 0;
};

/// Additive two-way ANOVA on a complete grid of cell means, rows = levels of
/// factor A, columns = levels of factor B, no interaction term.
AnovaResult two_way_anova_variance(const std::vector<std::vector<double>>& table);

double normal_cdf(double z);
/// Upper tail of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);
/// Upper tail of the F distribution.
double fisher_f_sf(double f, double df1, double df2);

/// One row of a Monte Carlo comparison table.
struct BenchmarkRow {
  std::string filter;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double improvement_pct = 0.0;
  std::optional<double> p_value;
  std::size_t n_reps = 0;
  std::size_t failures = 0;
};

/// Aggregates per-replication RMSEs against paired baseline RMSEs: CI is
/// mean +/- 1.96 SE, p from the paired Wilcoxon test (absent when fewer than
/// two replications or when the sample is the baseline itself).
BenchmarkRow make_row(const std::string& name, std::span<const double> rmses, std::span<const double> baseline,
                      bool is_baseline);

double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace pgate
