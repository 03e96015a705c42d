#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "gen.hpp"
#include "pgate/errors.hpp"
#include "pgate/stats.hpp"

using namespace pgate;
using pgate::test::Gen;

namespace {

// Brute-force two-sided signed-rank p over all 2^n sign patterns.
double wilcoxon_brute_force(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = 0.5 * (i + j) + 1.0;
    i = j + 1;
  }
  double w_obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w_obs += rank[i];
  }
  std::size_t le = 0;
  std::size_t ge = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) w += rank[i];
    }
    if (w <= w_obs + 1e-9) ++le;
    if (w >= w_obs - 1e-9) ++ge;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / std::ldexp(1.0, static_cast<int>(n)));
}

// Upper tail of Student's t by direct quadrature of the density.
double t_sf_quadrature(double t, double nu) {
  const double c = std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu)) / std::sqrt(nu * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / nu, -0.5 * (nu + 1)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(pdf, t, INFINITY, 15, 1e-13);
}

double binom_p(std::size_t k, std::size_t n) {
  double le = 0, ge = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    double c = 1;
    for (std::size_t j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
    const double pm = c * std::pow(0.5, n);
    if (i <= k) le += pm;
    if (i >= k) ge += pm;
  }
  return std::min(1.0, 2 * std::min(le, ge));
}

}  // namespace

TEST_CASE("rmse reference values") {
  const std::vector<double> t{1, 2, 3};
  CHECK(rmse(t, t) == 0.0);
  const std::vector<double> e{1.5, 2.5, 3.5};
  CHECK(rmse(e, t) == doctest::Approx(0.5));
  CHECK(rmse(std::vector<double>{3, 4}, std::vector<double>{0, 0}) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse(std::vector<double>{1}, t), LengthMismatch);
}

TEST_CASE("property: rmse triangle inequality") {
  Gen gen(51);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + gen.index(50);
    const auto a = gen.normals(n);
    const auto b = gen.normals(n);
    const auto c = gen.normals(n);
    CHECK(rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12);
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(x) == 5.0);
  CHECK(median(x) == 4.5);
  CHECK(stddev(x) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(stddev(std::vector<double>{0.1, 0.1, 0.1}) == 0.0);
  CHECK(stddev(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("wilcoxon worked example equals enumeration") {
  const std::vector<double> d{1, -2, 3, -4, 5, 6};
  const auto r = wilcoxon_signed_rank(d, 0.0);
  CHECK(r.exact);
  CHECK(r.p_value == doctest::Approx(wilcoxon_brute_force(d)).epsilon(1e-14));
  CHECK(r.w_plus == 15.0);
  CHECK(r.statistic == 6.0);
}

TEST_CASE("wilcoxon with one-signed ranks gives the minimal p") {
  for (std::size_t n = 5; n <= 15; ++n) {
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 2.0 + 0.1 * static_cast<double>(i);
      b[i] = a[i] - 1.5;
    }
    CHECK(wilcoxon_signed_rank(a, b).p_value == doctest::Approx(2.0 * std::ldexp(1.0, -static_cast<int>(n))));
  }
  const std::vector<double> z(6, 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(z, z), AllZeroDifferences);
}

TEST_CASE("property: wilcoxon exact branch equals brute force for n <= 12") {
  Gen gen(52);
  for (int i = 0; i < 400; ++i) {
    const std::size_t n = 1 + gen.index(12);
    std::vector<double> d(n);
    for (double& v : d) {
      // Integer-valued draws force ties.
      v = gen.coin() ? std::round(gen.uniform(-5, 5)) : gen.normal();
      if (v == 0.0) v = 1.0;
    }
    CHECK(wilcoxon_signed_rank(d, 0.0).p_value == doctest::Approx(wilcoxon_brute_force(d)).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon normal branch is close to the exact distribution at n = 15") {
  Gen gen(53);
  for (int i = 0; i < 20; ++i) {
    auto x = gen.normals(16, 0.4);
    const auto approx = wilcoxon_signed_rank(x, 0.0);
    CHECK_FALSE(approx.exact);
    CHECK(approx.p_value >= 0.0);
    CHECK(approx.p_value <= 1.0);
  }
}

TEST_CASE("one-sample t-test") {
  const std::vector<double> sym{-2, -1, 0, 1, 2};
  const auto r = t_test_one_sample(sym, 0.0);
  CHECK(r.t == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0));
  // Table value: t = 2.262 is the 0.975 quantile for 9 degrees of freedom.
  CHECK(2.0 * student_t_sf(2.262, 9) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(2.0 * student_t_sf(2.101, 18) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK_THROWS_AS(t_test_one_sample(std::vector<double>{1, 1, 1}, 0.0), ZeroVariance);
}

TEST_CASE("property: t tail equals quadrature of the density") {
  Gen gen(54);
  for (int i = 0; i < 200; ++i) {
    const double nu = 1.0 + gen.index(40);
    const double t = gen.uniform(-6, 6);
    CHECK(student_t_sf(t, nu) == doctest::Approx(t_sf_quadrature(t, nu)).epsilon(1e-8));
  }
}

TEST_CASE("sign test") {
  CHECK(sign_test_p(12, 19) == doctest::Approx(0.3593).epsilon(1e-3));
  CHECK(std::abs(sign_test_p(12, 19) - 0.359) < 1e-3);
  CHECK(sign_test_p(5, 10) == 1.0);
  for (std::size_t n = 1; n < 25; ++n) {
    CHECK(sign_test_p(n, n) == doctest::Approx(std::min(1.0, 2.0 * std::pow(0.5, n))));
    for (std::size_t k = 0; k <= n; ++k) CHECK(sign_test_p(k, n) == doctest::Approx(binom_p(k, n)).epsilon(1e-12));
  }
  const std::vector<double> x{-1, -2, 0, 3, -4};
  const auto r = sign_test(x, 0.0);
  CHECK(r.n == 4);
  CHECK(r.k_neg == 3);
}

TEST_CASE("bootstrap basics") {
  const std::vector<double> c(10, 2.5);
  const Estimator m = [](std::span<const double> s) { return mean(s); };
  const auto ci = bootstrap_ci(c, m, 500, 0.95, 1);
  CHECK(ci.lo == 2.5);
  CHECK(ci.hi == 2.5);
  Gen gen(55);
  const auto x = gen.normals(30);
  const auto a = bootstrap_ci(x, m, 2000, 0.95, 9);
  const auto b = bootstrap_ci(x, m, 2000, 0.95, 9);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
}

TEST_CASE("property: wider level nests the narrower interval") {
  Gen gen(56);
  const Estimator med = [](std::span<const double> s) { return median(s); };
  for (int i = 0; i < 30; ++i) {
    const auto x = gen.normals(5 + gen.index(40));
    const std::uint64_t seed = gen.seed();
    const auto i95 = bootstrap_ci(x, med, 1000, 0.95, seed);
    const auto i99 = bootstrap_ci(x, med, 1000, 0.99, seed);
    CHECK(i99.lo <= i95.lo);
    CHECK(i99.hi >= i95.hi);
  }
}

TEST_CASE("bootstrap percentile coverage simulation") {
  Gen gen(57);
  const Estimator m = [](std::span<const double> s) { return mean(s); };
  int covered = 0;
  const int outer = 200;
  for (int i = 0; i < outer; ++i) {
    const auto x = gen.normals(50);
    const auto ci = bootstrap_ci(x, m, 1000, 0.95, gen.seed());
    covered += (ci.lo <= 0.0 && 0.0 <= ci.hi) ? 1 : 0;
  }
  const double cov = covered / static_cast<double>(outer);
  CHECK(cov >= 0.90);
  CHECK(cov <= 0.99);
}

TEST_CASE("anova decompositions") {
  const std::vector<std::vector<double>> flat(4, std::vector<double>(3, 7.0));
  const auto f = two_way_anova_variance(flat);
  CHECK(f.pct_var_a == 0.0);
  CHECK(f.pct_var_b == 0.0);
  const std::vector<std::vector<double>> rows{{1, 1, 1}, {2, 2, 2}, {5, 5, 5}};
  CHECK(two_way_anova_variance(rows).pct_var_a == doctest::Approx(100.0));
  CHECK_THROWS_AS(two_way_anova_variance({{1, 2, 3}}), DegenerateGrid);
  const auto g = two_way_anova_variance(std::vector<std::vector<double>>(5, std::vector<double>(5, 0.0)));
  CHECK(g.df_a == 4);
  CHECK(g.df_resid == 16);
}

TEST_CASE("property: anova percentages sum to 100") {
  Gen gen(58);
  for (int i = 0; i < 300; ++i) {
    const std::size_t a = 2 + gen.index(6);
    const std::size_t b = 2 + gen.index(6);
    std::vector<std::vector<double>> t(a, std::vector<double>(b));
    for (auto& row : t) {
      for (double& v : row) v = gen.normal();
    }
    const auto r = two_way_anova_variance(t);
    CHECK(r.pct_var_a + r.pct_var_b + r.pct_var_resid == doctest::Approx(100.0).epsilon(1e-11));
    // F ratios against the residual mean square.
    const double ms_res = r.pct_var_resid / r.df_resid;
    if (ms_res > 0) CHECK(r.f_a == doctest::Approx(r.pct_var_a / r.df_a / ms_res).epsilon(1e-9));
  }
}

TEST_CASE("F distribution tail against quadrature") {
  // F(2, 10) upper tail has closed form (1 + 2f/10)^-5.
  for (double f : {0.5, 1.0, 3.0, 7.5}) {
    CHECK(fisher_f_sf(f, 2, 10) == doctest::Approx(std::pow(1 + f / 5, -5)).epsilon(1e-10));
  }
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("benchmark rows") {
  const std::vector<double> base{1.0, 1.2, 0.9, 1.1, 1.3, 1.0};
  const std::vector<double> alt{0.5, 0.6, 0.45, 0.55, 0.65, 0.5};
  const auto b = make_row("EKF Std", base, base, true);
  CHECK(b.improvement_pct == 0.0);
  CHECK_FALSE(b.p_value.has_value());
  const auto r = make_row("PG-EKF", alt, base, false);
  CHECK(r.improvement_pct == doctest::Approx(100.0 * (1 - mean(alt) / mean(base))));
  CHECK(r.ci_lo <= r.rmse_mean);
  CHECK(r.rmse_mean <= r.ci_hi);
  CHECK(r.p_value.has_value());
  const auto one = make_row("x", std::vector<double>{0.7}, std::vector<double>{1.0}, false);
  CHECK(one.ci_lo == one.rmse_mean);
  CHECK(one.ci_hi == one.rmse_mean);
  CHECK_FALSE(one.p_value.has_value());
}

TEST_CASE("spearman") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(spearman(a, std::vector<double>{10, 20, 30, 45}) == doctest::Approx(1.0));
  CHECK(spearman(a, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
}
