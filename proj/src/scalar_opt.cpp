#include "pgate/scalar_opt.hpp"

#include <algorithm>
#include <cmath>

namespace pgate {

namespace {

constexpr double kGradTol = 1e-8;
constexpr double kWidthTol = 1e-10;

double r_of(const CostContext& c, double x) noexcept {
  return gated_r(c.gp, gating_potential(c.params, c.summary, x));
}

}  // namespace

double cost(const CostContext& c, double x) noexcept {
  const double dp = x - c.x_pred;
  const double dy = c.y - x;
  return dp * dp / c.p_pred + dy * dy / r_of(c, x) +
         c.gp.lambda * gating_potential(c.params, c.summary, x);
}

double cost_gradient(const CostContext& c, double x) noexcept {
  const double dv = -drift(c.params, x);  // V'(x)
  const double r = r_of(c, x);
  const double dr = c.gp.r0 * c.gp.g * dv;
  const double dy = c.y - x;
  return 2.0 * (x - c.x_pred) / c.p_pred - 2.0 * dy / r - dy * dy * dr / (r * r) +
         c.gp.lambda * dv;
}

double cost_curvature(const CostContext& c, double x) noexcept {
  const double dv = -drift(c.params, x);
  const double d2v = v_second(c.params, x);
  const double r = r_of(c, x);
  const double dr = c.gp.r0 * c.gp.g * dv;
  const double d2r = c.gp.r0 * c.gp.g * d2v;
  const double dy = c.y - x;
  const double u = dy * dy;
  const double du = -2.0 * dy;
  const double data = 2.0 / r - 2.0 * du * dr / (r * r) - u * d2r / (r * r) +
                      2.0 * u * dr * dr / (r * r * r);
  return 2.0 / c.p_pred + data + c.gp.lambda * d2v;
}

double default_halfwidth(const CostContext& c) noexcept {
  return 6.0 * std::sqrt(c.p_pred + c.gp.r0);
}

MinimizeResult minimize_cost(const CostContext& c, double x_init, double halfwidth) {
  MinimizeResult res{x_init, 0, true};
  const double lo_bound = x_init - halfwidth;
  const double hi_bound = x_init + halfwidth;

  double g0 = cost_gradient(c, x_init);
  if (std::abs(g0) < kGradTol) return res;

  // Walk downhill with doubling steps until the gradient changes sign. A rise in
  // cost means a valley may have been stepped over: retreat and shrink the step,
  // so the bracket closes on the first basin reached. Step growth is capped
  // so narrow valleys are not jumped.
  const double dir = g0 < 0.0 ? 1.0 : -1.0;
  const double min_step = kWidthTol;
  const double max_step = halfwidth / 32.0;
  double step = std::min(halfwidth, 1e-3 * std::max(1.0, halfwidth));
  double a = x_init;
  double fa = cost(c, x_init);
  double b = x_init;
  double gb = g0;
  for (;;) {
    ++res.n_iter;
    b = std::clamp(a + dir * step, lo_bound, hi_bound);
    gb = cost_gradient(c, b);
    const double fb = cost(c, b);
    const bool crossed = (gb > 0.0) == (dir > 0.0) || gb == 0.0;
    if (fb > fa && step > min_step) {
      step *= 0.25;
    } else if (crossed) {
      break;
    } else {
      if (b == lo_bound || b == hi_bound) {
        res.x_star = b;  // descent runs into the bound
        return res;
      }
      a = b;
      fa = fb;
      step = std::min(2.0 * step, max_step);
    }
    if (res.n_iter >= kMaxMinimizeIter) {
      res.x_star = a;
      res.converged = false;
      return res;
    }
  }
  if (gb == 0.0) {
    res.x_star = b;
    return res;
  }
  // Orient so that g(lo) < 0 < g(hi).
  double lo = dir > 0.0 ? a : b;
  double hi = dir > 0.0 ? b : a;

  double x = 0.5 * (lo + hi);
  double best = x;
  double best_abs = INFINITY;
  while (res.n_iter < kMaxMinimizeIter) {
    ++res.n_iter;
    const double g = cost_gradient(c, x);
    if (std::abs(g) < best_abs) {
      best_abs = std::abs(g);
      best = x;
    }
    if (std::abs(g) < kGradTol || hi - lo < kWidthTol) {
      res.x_star = x;
      return res;
    }
    if (g < 0.0) lo = x; else hi = x;
    const double h = cost_curvature(c, x);
    double next = h > 0.0 ? x - g / h : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) {
      res.x_star = x;
      return res;
    }
    x = next;
  }
  res.x_star = best;
  res.converged = false;
  return res;
}

double hessian_proxy(const CostContext& c, double x) noexcept {
  return 1.0 / c.p_pred + 1.0 / r_of(c, x) + c.gp.lambda * v_second(c.params, x);
}

double hessian_covariance(const CostContext& c, double x_star) noexcept {
  const double h = hessian_proxy(c, x_star);
  double p;
  if (h > 0.0 && std::isfinite(h)) {
    p = 1.0 / h;
  } else {
    p = 1.0 / (1.0 / c.p_pred + 1.0 / r_of(c, x_star));
  }
  if (!std::isfinite(p)) p = c.p_pred;
  return std::max(kPMin, p);
}

}  // namespace pgate
