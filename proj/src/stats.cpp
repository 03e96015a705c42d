#include "pgate/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "pgate/errors.hpp"
#include "pgate/rng.hpp"

namespace pgate {

double rmse(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size() || est.empty()) {
    throw LengthMismatch("rmse: lengths " + std::to_string(est.size()) + " and " +
                         std::to_string(truth.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = est[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(est.size()));
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double median(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.5);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_sf(double t, double df) {
  const boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

double fisher_f_sf(double f, double df1, double df2) {
  if (!(f > 0.0)) return 1.0;
  if (!std::isfinite(f)) return 0.0;
  const boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

namespace {

/// Average ranks of |d|, 1-based.
std::vector<double> average_ranks(const std::vector<double>& absd) {
  const std::size_t n = absd.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return absd[a] < absd[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && absd[idx[j + 1]] == absd[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_from_diffs(std::vector<double> d) {
  d.erase(std::remove(d.begin(), d.end(), 0.0), d.end());
  if (d.empty()) throw AllZeroDifferences("wilcoxon: every paired difference is zero");
  const std::size_t n = d.size();
  std::vector<double> absd(n);
  for (std::size_t i = 0; i < n; ++i) absd[i] = std::abs(d[i]);
  const std::vector<double> ranks = average_ranks(absd);

  WilcoxonResult r;
  r.n = n;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += ranks[i];
    if (d[i] > 0.0) r.w_plus += ranks[i];
  }
  r.statistic = std::min(r.w_plus, total - r.w_plus);

  if (n <= kWilcoxonExactMaxN) {
    // Null distribution of 2 W+ over all 2^n sign patterns; doubled ranks are integers.
    r.exact = true;
    std::vector<int> dr(n);
    int max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dr[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      max_sum += dr[i];
    }
    std::vector<double> count(static_cast<std::size_t>(max_sum) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int w : dr) {
      for (int s = reach; s >= 0; --s) {
        if (count[s] != 0.0) count[s + w] += count[s];
      }
      reach += w;
    }
    const int obs = static_cast<int>(std::lround(2.0 * r.w_plus));
    double le = 0.0;
    double ge = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
      if (s <= obs) le += count[s];
      if (s >= obs) ge += count[s];
    }
    const double denom = std::ldexp(1.0, static_cast<int>(n));
    r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  std::vector<double> sorted = absd;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.w_plus - mu) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("wilcoxon: unequal sample lengths");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return wilcoxon_from_diffs(std::move(d));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, double mu0) {
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - mu0;
  return wilcoxon_from_diffs(std::move(d));
}

TTestResult t_test_one_sample(std::span<const double> x, double mu0) {
  if (x.size() < 2) throw ZeroVariance("t-test needs at least two values");
  const double sd = stddev(x);
  if (!(sd > 0.0)) throw ZeroVariance("t-test: sample variance is zero");
  TTestResult r;
  r.df = static_cast<double>(x.size() - 1);
  r.t = (mean(x) - mu0) / (sd / std::sqrt(static_cast<double>(x.size())));
  r.p_value = std::min(1.0, 2.0 * student_t_sf(std::abs(r.t), r.df));
  return r;
}

double sign_test_p(std::size_t k, std::size_t n) {
  if (n == 0) return 1.0;
  auto pmf = [n](std::size_t i) {
    const double nn = static_cast<double>(n);
    const double ii = static_cast<double>(i);
    return std::exp(std::lgamma(nn + 1.0) - std::lgamma(ii + 1.0) - std::lgamma(nn - ii + 1.0) -
                    nn * std::log(2.0));
  };
  double le = 0.0;
  double ge = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    if (i <= k) le += pmf(i);
    if (i >= k) ge += pmf(i);
  }
  return std::min(1.0, 2.0 * std::min(le, ge));
}

SignTestResult sign_test(std::span<const double> x, double mu0) {
  SignTestResult r;
  for (double v : x) {
    if (v == mu0) continue;
    ++r.n;
    if (v < mu0) ++r.k_neg;
  }
  r.p_value = sign_test_p(r.k_neg, r.n);
  return r;
}

Interval bootstrap_ci(std::span<const double> x, const Estimator& stat, std::size_t n_boot, double level,
                      std::uint64_t seed) {
  if (x.size() < 2) throw ConfigError("bootstrap_ci needs at least two values");
  if (n_boot == 0 || !(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap_ci: bad n_boot or level");
  std::vector<double> stats(n_boot);
  std::vector<double> sample(x.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    Rng rng(derive_seed(seed, b));
    for (double& s : sample) s = x[rng.below(x.size())];
    stats[b] = stat(sample);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

AnovaResult two_way_anova_variance(const std::vector<std::vector<double>>& table) {
  const std::size_t a = table.size();
  if (a < 2) throw DegenerateGrid("anova: factor A needs at least two levels");
  const std::size_t b = table[0].size();
  if (b < 2) throw DegenerateGrid("anova: factor B needs at least two levels");
  for (const auto& row : table) {
    if (row.size() != b) throw DegenerateGrid("anova: ragged grid");
  }
  double grand = 0.0;
  std::vector<double> row_mean(a, 0.0);
  std::vector<double> col_mean(b, 0.0);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      grand += table[i][j];
      row_mean[i] += table[i][j];
      col_mean[j] += table[i][j];
    }
  }
  grand /= static_cast<double>(a * b);
  for (auto& m : row_mean) m /= static_cast<double>(b);
  for (auto& m : col_mean) m /= static_cast<double>(a);

  double ss_a = 0.0;
  double ss_b = 0.0;
  double ss_t = 0.0;
  for (std::size_t i = 0; i < a; ++i) ss_a += static_cast<double>(b) * (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < b; ++j) ss_b += static_cast<double>(a) * (col_mean[j] - grand) * (col_mean[j] - grand);
  for (const auto& row : table) {
    for (double v : row) ss_t += (v - grand) * (v - grand);
  }
  const double ss_r = std::max(0.0, ss_t - ss_a - ss_b);

  AnovaResult r;
  r.df_a = a - 1;
  r.df_b = b - 1;
  r.df_resid = (a - 1) * (b - 1);
  if (!(ss_t > 0.0)) return r;
  r.pct_var_a = 100.0 * ss_a / ss_t;
  r.pct_var_b = 100.0 * ss_b / ss_t;
  r.pct_var_resid = 100.0 - r.pct_var_a - r.pct_var_b;
  const double ms_r = ss_r / static_cast<double>(r.df_resid);
  const double ms_a = ss_a / static_cast<double>(r.df_a);
  const double ms_b = ss_b / static_cast<double>(r.df_b);
  r.f_a = ms_r > 0.0 ? ms_a / ms_r : INFINITY;
  r.f_b = ms_r > 0.0 ? ms_b / ms_r : INFINITY;
  r.p_a = fisher_f_sf(r.f_a, static_cast<double>(r.df_a), static_cast<double>(r.df_resid));
  r.p_b = fisher_f_sf(r.f_b, static_cast<double>(r.df_b), static_cast<double>(r.df_resid));
  return r;
}

BenchmarkRow make_row(const std::string& name, std::span<const double> rmses, std::span<const double> baseline,
                      bool is_baseline) {
  BenchmarkRow row;
  row.filter = name;
  row.n_reps = rmses.size();
  row.rmse_mean = mean(rmses);
  row.rmse_std = stddev(rmses);
  const double se = rmses.size() > 1 ? row.rmse_std / std::sqrt(static_cast<double>(rmses.size())) : 0.0;
  row.ci_lo = row.rmse_mean - 1.96 * se;
  row.ci_hi = row.rmse_mean + 1.96 * se;
  const double base = mean(baseline);
  row.improvement_pct = base > 0.0 ? 100.0 * (1.0 - row.rmse_mean / base) : 0.0;
  if (!is_baseline && rmses.size() >= 2 && rmses.size() == baseline.size()) {
    try {
      row.p_value = wilcoxon_signed_rank(rmses, baseline).p_value;
    } catch (const AllZeroDifferences&) {
      row.p_value.reset();
    }
  }
  return row;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw LengthMismatch("spearman: need equal lengths >= 2");
  auto rank = [](std::span<const double> v) {
    std::vector<double> absd(v.begin(), v.end());
    return average_ranks(absd);
  };
  const std::vector<double> ra = rank(a);
  const std::vector<double> rb = rank(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace pgate
