#include <cmath>

#include <doctest.h>

#include "gen.hpp"
#include "pgate/errors.hpp"
#include "pgate/potential.hpp"

using namespace pgate;
using pgate::test::Gen;

namespace {

// Independent oracle: bracket the real roots of the drift cubic by scanning.
std::vector<double> drift_roots_by_scan(const PotentialParams& p) {
  std::vector<double> roots;
  const double lo = -10.0;
  const double hi = 10.0;
  const int n = 200000;
  auto f = [&](double x) { return p.alpha * x - p.beta * x * x * x + p.gamma; };
  double prev_x = lo;
  double prev_f = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double fx = f(x);
    if ((prev_f < 0) != (fx < 0)) {
      double a = prev_x;
      double b = x;
      for (int k = 0; k < 200; ++k) {
        const double m = 0.5 * (a + b);
        if ((f(a) < 0) != (f(m) < 0)) b = m; else a = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = fx;
  }
  return roots;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("potential values at reference points") {
  const PotentialParams sym{1, 1, 0};
  CHECK(v(sym, 0.0) == 0.0);
  CHECK(v(sym, 1.0) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(v({1, 1, 0.1}, 0.0) == 0.0);
  CHECK(drift(sym, 1.0) == 0.0);
  CHECK(drift(sym, 0.0) == 0.0);
  CHECK(drift({1, 1, 0.1}, 0.0) == doctest::Approx(0.1));
  CHECK(v_second(sym, 1.0) == 2.0);
  CHECK(v_second(sym, 0.0) == -1.0);
  CHECK(v_second({2, 1, 0}, 0.0) == -2.0);
}

TEST_CASE("landscape of reference potentials") {
  const auto s = landscape({1, 1, 0});
  CHECK(s.wells[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(s.wells[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.barrier_x) < 1e-12);
  CHECK(s.barrier_height == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(landscape({2, 1, 0}).barrier_height == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(landscape({1.41, 1, 0}).barrier_height == doctest::Approx(0.497).epsilon(0.01));
  CHECK_THROWS_AS(landscape({1, 1, 2}), MonostableError);
  CHECK_THROWS_AS(PotentialParams({0, 1, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(PotentialParams({1, -1, 0}).validate(), ConfigError);
}

TEST_CASE("gating transforms at reference points") {
  const PotentialParams sym{1, 1, 0};
  const auto s = landscape(sym);
  CHECK(gating_potential(sym, s, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gating_potential(sym, s, -1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gating_potential(sym, s, 0.0) == doctest::Approx(0.25));
  const PotentialParams tilt{1, 1, -0.109};
  const auto st = landscape(tilt);
  CHECK(std::abs(gating_potential(tilt, st, st.wells[0])) < 1e-14);
  CHECK(gating_potential(tilt, st, st.wells[1]) > 0.0);

  CHECK(gated_r({0, 0.1, 0.09}, 5.0) == doctest::Approx(0.09));
  CHECK(gated_r({10, 0.1, 0.09}, 0.25) == doctest::Approx(0.315));
  CHECK(gated_r({10, 0.1, 0.09}, 0.0) == doctest::Approx(0.09));
  const GatingParams gp{10, 0.1, 0.09};
  CHECK(naive_r(gp, s, 1.0) == doctest::Approx(0.09));
  CHECK(naive_r(gp, s, 0.0) == doctest::Approx(0.99));
  CHECK(naive_r(gp, s, 0.5) == doctest::Approx(0.315));
}

TEST_CASE("kramers quantities at sigma 0.5") {
  const auto k = kramers_quantities({1, 1, 0}, 0.5);
  CHECK(k.t_eff == doctest::Approx(0.125));
  CHECK(k.pi1 == doctest::Approx(2.0));
  // Eyring-Kramers: 2 pi / sqrt(V''(1) |V''(0)|) exp(dV / t_eff) = 2 pi / sqrt(2) e^2.
  const double oracle = 2.0 * M_PI / std::sqrt(2.0) * std::exp(2.0);
  CHECK(k.tau == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(k.tau == doctest::Approx(33.0).epsilon(0.2));
}

TEST_CASE("property: derivatives match finite differences") {
  Gen gen(11);
  for (int i = 0; i < 2000; ++i) {
    const PotentialParams p = gen.bistable_params();
    const double x = gen.uniform(-3, 3);
    const double h = 1e-5;
    const double fd1 = (v(p, x + h) - v(p, x - h)) / (2 * h);
    CHECK(rel_err(drift(p, x), -fd1) < 1e-6);
    const double h2 = 1e-4;
    const double fd2 = (v(p, x + h2) - 2 * v(p, x) + v(p, x - h2)) / (h2 * h2);
    CHECK(rel_err(v_second(p, x), fd2) < 1e-5);
    const double fds = (drift(p, x + h) - drift(p, x - h)) / (2 * h);
    CHECK(rel_err(drift_slope(p, x), fds) < 1e-6);
  }
}

TEST_CASE("property: symmetric wells and barrier in closed form") {
  Gen gen(12);
  for (int i = 0; i < 1000; ++i) {
    PotentialParams p = gen.bistable_params();
    p.gamma = 0.0;
    const auto s = landscape(p);
    const double w = std::sqrt(p.alpha / p.beta);
    CHECK(std::abs(s.wells[0] + w) < 1e-10);
    CHECK(std::abs(s.wells[1] - w) < 1e-10);
    CHECK(std::abs(s.barrier_height - p.alpha * p.alpha / (4 * p.beta)) < 1e-10);
  }
}

TEST_CASE("property: landscape agrees with scanned roots") {
  Gen gen(13);
  for (int i = 0; i < 40; ++i) {
    const PotentialParams p = gen.bistable_params();
    const auto s = landscape(p);
    const auto roots = drift_roots_by_scan(p);
    REQUIRE(roots.size() == 3);
    CHECK(s.wells[0] == doctest::Approx(roots[0]).epsilon(1e-9));
    CHECK(s.barrier_x == doctest::Approx(roots[1]).epsilon(1e-9));
    CHECK(s.wells[1] == doctest::Approx(roots[2]).epsilon(1e-9));
    const double shallow = std::max(v(p, roots[0]), v(p, roots[2]));
    CHECK(s.barrier_height == doctest::Approx(v(p, roots[1]) - shallow).epsilon(1e-9));
    CHECK(s.v_min == doctest::Approx(std::min(v(p, roots[0]), v(p, roots[2]))).epsilon(1e-9));
  }
}

TEST_CASE("property: reflection symmetry (x, gamma) -> (-x, -gamma)") {
  Gen gen(14);
  for (int i = 0; i < 1000; ++i) {
    const PotentialParams p = gen.bistable_params();
    const PotentialParams q{p.alpha, p.beta, -p.gamma};
    const auto a = landscape(p);
    const auto b = landscape(q);
    CHECK(a.wells[0] == doctest::Approx(-b.wells[1]).epsilon(1e-10));
    CHECK(a.wells[1] == doctest::Approx(-b.wells[0]).epsilon(1e-10));
    CHECK(a.barrier_height == doctest::Approx(b.barrier_height).epsilon(1e-10));
  }
}

TEST_CASE("property: gated covariances never below R0") {
  Gen gen(15);
  for (int i = 0; i < 5000; ++i) {
    const PotentialParams p = gen.bistable_params();
    const auto s = landscape(p);
    const GatingParams gp = gen.gating();
    const double x = gen.uniform(-4, 4);
    const double vt = gating_potential(p, s, x);
    CHECK(vt >= 0.0);
    CHECK(gated_r(gp, vt) >= gp.r0);
    CHECK(naive_r(gp, s, x) >= gp.r0);
    const GatingParams off{0.0, gp.lambda, gp.r0};
    CHECK(gated_r(off, vt) == gp.r0);
    CHECK(naive_r(off, s, x) == gp.r0);
  }
  // Zero at exactly one well when tilted.
  const PotentialParams p{1, 1, 0.2};
  const auto s = landscape(p);
  CHECK(gating_potential(p, s, s.wells[1]) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(gating_potential(p, s, s.wells[0]) > 0.1);
}
