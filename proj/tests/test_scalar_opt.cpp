#include <cmath>

#include <doctest.h>

#include "gen.hpp"
#include "pgate/scalar_opt.hpp"

using namespace pgate;
using pgate::test::Gen;

namespace {

// Term-by-term evaluation written out independently of the library.
double cost_oracle(const CostContext& c, double x) {
  const double a = c.params.alpha, b = c.params.beta, g = c.params.gamma;
  const double vx = -0.5 * a * x * x + 0.25 * b * x * x * x * x - g * x;
  const double vt = vx - c.summary.v_min;
  const double r = c.gp.r0 * (1.0 + c.gp.g * vt);
  return (x - c.x_pred) * (x - c.x_pred) / c.p_pred + (c.y - x) * (c.y - x) / r + c.gp.lambda * vt;
}

// Local minimum reached by walking downhill from x0 on a uniform grid of
// spacing h, refined by golden-section search inside the neighbouring cells.
double grid_descent(const CostContext& c, double x0, double w, double h) {
  const long n = static_cast<long>(std::ceil(w / h));
  auto at = [&](long i) { return x0 + static_cast<double>(i) * h; };
  long i = 0;
  const long dir = cost_oracle(c, at(1)) < cost_oracle(c, at(-1)) ? 1 : -1;
  while (std::abs(i + dir) <= n && cost_oracle(c, at(i + dir)) < cost_oracle(c, at(i))) i += dir;
  double lo = at(i - 1), hi = at(i + 1);
  lo = std::max(lo, x0 - w);
  hi = std::min(hi, x0 + w);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int k = 0; k < 200 && hi - lo > 1e-12; ++k) {
    const double m1 = hi - r * (hi - lo);
    const double m2 = lo + r * (hi - lo);
    if (cost_oracle(c, m1) < cost_oracle(c, m2)) hi = m2; else lo = m1;
  }
  return 0.5 * (lo + hi);
}

CostContext example_context() {
  CostContext c;
  c.x_pred = 0.8;
  c.p_pred = 0.1;
  c.y = 2.0;
  c.gp = {10, 0.1, 0.09};
  c.params = {1, 1, 0};
  c.summary = landscape(c.params);
  return c;
}

}  // namespace

TEST_CASE("cost at a worked point") {
  const CostContext c = example_context();
  // At x = 1: 0.04/0.1 + 1/0.09 + 0 = 0.4 + 11.111...
  CHECK(cost(c, 1.0) == doctest::Approx(0.4 + 1.0 / 0.09).epsilon(1e-14));
  CHECK(cost(c, 1.0) == doctest::Approx(cost_oracle(c, 1.0)).epsilon(1e-14));
  CostContext z = c;
  z.x_pred = z.y = 1.0;
  CHECK(cost(z, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("cost without gating is the Kalman quadratic") {
  CostContext c = example_context();
  c.gp.g = 0;
  c.gp.lambda = 0;
  for (double x : {-1.0, 0.3, 2.2}) {
    CHECK(cost(c, x) == doctest::Approx((x - 0.8) * (x - 0.8) / 0.1 + (2 - x) * (2 - x) / 0.09).epsilon(1e-14));
  }
  const auto m = minimize_cost(c, c.x_pred, default_halfwidth(c));
  const double k = 0.1 / (0.1 + 0.09);
  CHECK(std::abs(m.x_star - (0.8 + k * (2.0 - 0.8))) < 1e-8);
  CHECK(hessian_covariance(c, m.x_star) == doctest::Approx(1.0 / (1 / 0.1 + 1 / 0.09)).epsilon(1e-12));
  CHECK(hessian_covariance(c, m.x_star) == doctest::Approx(0.04737).epsilon(1e-4));
}

TEST_CASE("minimizer agrees with grid search on the worked context") {
  const CostContext c = example_context();
  const double w = default_halfwidth(c);
  const double kx = c.x_pred + 0.1 / 0.19 * (c.y - c.x_pred);
  const auto m = minimize_cost(c, kx, w);
  CHECK(m.converged);
  CHECK(std::abs(m.x_star - grid_descent(c, kx, w, 1e-6)) < 1e-5);
}

TEST_CASE("minimizer stays at a well when prior and data agree there") {
  CostContext c = example_context();
  c.x_pred = c.y = 1.0;
  const auto m = minimize_cost(c, 1.0, default_halfwidth(c));
  CHECK(std::abs(m.x_star - 1.0) < 1e-8);
}

TEST_CASE("hessian covariance branches") {
  CostContext c = example_context();
  c.gp.g = 0;
  c.gp.lambda = 0;
  const double base = hessian_covariance(c, 1.0);
  c.gp.lambda = 0.5;
  CHECK(hessian_covariance(c, 1.0) < base);
  CHECK(hessian_proxy(c, 1.0) == doctest::Approx(1 / 0.1 + 1 / 0.09 + 0.5 * 2.0));

  // Proxy negative near the barrier: falls back to (1/P + 1/R)^-1.
  CostContext n = example_context();
  n.p_pred = 1e6;
  n.gp = {10, 1.0, 1e6};
  CHECK(hessian_proxy(n, 0.0) < 0.0);
  const double r = gated_r(n.gp, gating_potential(n.params, n.summary, 0.0));
  CHECK(hessian_covariance(n, 0.0) == doctest::Approx(1.0 / (1.0 / n.p_pred + 1.0 / r)));
}

TEST_CASE("property: analytic gradient matches central differences") {
  Gen gen(21);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const CostContext c = gen.cost_context();
    const double x = gen.uniform(-3, 3);
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    const double fd = (cost(c, x + h) - cost(c, x - h)) / (2 * h);
    const double an = cost_gradient(c, x);
    const double scale = std::max(std::abs(an), 1.0);
    CHECK(std::abs(an - fd) / scale < 1e-5);
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("property: curvature matches differences of the gradient") {
  Gen gen(22);
  for (int i = 0; i < 2000; ++i) {
    const CostContext c = gen.cost_context();
    const double x = gen.uniform(-3, 3);
    const double h = 1e-6;
    const double fd = (cost_gradient(c, x + h) - cost_gradient(c, x - h)) / (2 * h);
    CHECK(std::abs(cost_curvature(c, x) - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
  }
}

TEST_CASE("property: proxy is the verbatim curvature sum") {
  Gen gen(23);
  for (int i = 0; i < 2000; ++i) {
    const CostContext c = gen.cost_context();
    const double x = gen.uniform(-3, 3);
    const double r = gated_r(c.gp, gating_potential(c.params, c.summary, x));
    CHECK(hessian_proxy(c, x) == 1.0 / c.p_pred + 1.0 / r + c.gp.lambda * v_second(c.params, x));
  }
}

TEST_CASE("property: minimizer reaches a local minimum no worse than grid descent") {
  Gen gen(24);
  std::size_t same_basin = 0;
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    const CostContext c = gen.cost_context();
    const double k = c.p_pred / (c.p_pred + c.gp.r0);
    const double x0 = c.x_pred + k * (c.y - c.x_pred);
    const double w = default_halfwidth(c);
    const auto m = minimize_cost(c, x0, w);
    REQUIRE(std::isfinite(m.x_star));
    CHECK(m.converged);
    // Descending from x* on a fine grid must not move it: it is a local minimum.
    const double here = grid_descent(c, m.x_star, std::min(1e-2, w), 1e-5);
    const bool at_bound = std::abs(std::abs(m.x_star - x0) - w) < 1e-9;
    if (!at_bound) CHECK(std::abs(here - m.x_star) < 1e-5);
    // Never worse than the first basin a plain downhill walk reaches.
    const double oracle = grid_descent(c, x0, w, 1e-4);
    CHECK(cost_oracle(c, m.x_star) <= cost_oracle(c, oracle) + 1e-9);
    CHECK(cost_oracle(c, m.x_star) <= cost_oracle(c, x0) + 1e-12);
    if (std::abs(m.x_star - oracle) < 1e-5) ++same_basin;
  }
  // A valley shallower than the step scale can be jumped, but only rarely.
  CHECK(same_basin >= static_cast<std::size_t>(0.97 * n));
}

TEST_CASE("property: ungated update is the scalar Kalman pair") {
  Gen gen(25);
  for (int i = 0; i < 3000; ++i) {
    CostContext c = gen.cost_context();
    c.gp.g = 0;
    c.gp.lambda = 0;
    const double k = c.p_pred / (c.p_pred + c.gp.r0);
    const double kx = c.x_pred + k * (c.y - c.x_pred);
    const auto m = minimize_cost(c, kx, default_halfwidth(c));
    CHECK(std::abs(m.x_star - kx) < 1e-8);
    const double kp = std::max(kPMin, (1 - k) * c.p_pred);
    CHECK(std::abs(hessian_covariance(c, m.x_star) - kp) < 1e-8);
  }
}

TEST_CASE("property: covariance finite and floored") {
  Gen gen(26);
  for (int i = 0; i < 5000; ++i) {
    const CostContext c = gen.cost_context();
    const double x = gen.uniform(-3, 3);
    const double p = hessian_covariance(c, x);
    CHECK(std::isfinite(p));
    CHECK(p >= kPMin);
  }
}
