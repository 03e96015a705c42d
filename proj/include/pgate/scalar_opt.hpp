#pragma once

#include <cstddef>

#include "pgate/potential.hpp"

namespace pgate {

inline constexpr double kPMin = 1e-4;

/// Everything the penalized update cost needs at one filter step.
struct CostContext {
  double x_pred = 0.0;  // predicted mean
  double p_pred = 1.0;  // predicted variance, floored at kPMin
  double y = 0.0;
  GatingParams gp;
  PotentialParams params;
  LandscapeSummary summary;
};

/// (x - x_pred)^2 / P + (y - x)^2 / R(x) + lambda * Vtilde(x), R gated.
double cost(const CostContext& ctx, double x) noexcept;
double cost_gradient(const CostContext& ctx, double x) noexcept;
/// Exact second derivative of `cost` (used for Newton steps only).
double cost_curvature(const CostContext& ctx, double x) noexcept;

struct MinimizeResult {
  double x_star = 0.0;
  std::size_t n_iter = 0;
  bool converged = true;  // false: iteration cap hit, x_star is best-so-far
};

inline constexpr std::size_t kMaxMinimizeIter = 200;

/// Local minimizer of `cost` reached by descending from x_init inside
/// [x_init - halfwidth, x_init + halfwidth]. Newton steps are taken inside a
/// sign-change bracket of the gradient and replaced by bisection whenever they
/// leave it.
MinimizeResult minimize_cost(const CostContext& ctx, double x_init, double halfwidth);

/// Default search half-width 6 sqrt(P + R0).
double default_halfwidth(const CostContext& ctx) noexcept;

/// Curvature proxy 1/P + 1/R(x) + lambda V''(x), taken verbatim; it omits the
/// derivative terms of R(x) so it is not the exact second derivative of cost.
double hessian_proxy(const CostContext& ctx, double x) noexcept;

/// max(kPMin, 1 / hessian_proxy); when the proxy is not positive, falls back to
/// (1/P + 1/R(x))^-1.
double hessian_covariance(const CostContext& ctx, double x_star) noexcept;

}  // namespace pgate
