#include "pgate/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pgate/errors.hpp"

namespace pgate {

namespace {
constexpr double kDiscriminantTol = 1e-12;
}

void PotentialParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("potential requires alpha > 0 and beta > 0 (got alpha=" +
                      std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
}

double v(const PotentialParams& p, double x) noexcept {
  const double x2 = x * x;
  return -0.5 * p.alpha * x2 + 0.25 * p.beta * x2 * x2 - p.gamma * x;
}

double drift(const PotentialParams& p, double x) noexcept {
  return p.alpha * x - p.beta * x * x * x + p.gamma;
}

double drift_slope(const PotentialParams& p, double x) noexcept {
  return p.alpha - 3.0 * p.beta * x * x;
}

double v_second(const PotentialParams& p, double x) noexcept {
  return -p.alpha + 3.0 * p.beta * x * x;
}

LandscapeSummary landscape(const PotentialParams& p) {
  p.validate();
  // Drift zeros solve t^3 + a t + b = 0 with a = -alpha/beta, b = -gamma/beta.
  const double a = -p.alpha / p.beta;
  const double b = -p.gamma / p.beta;
  const double disc = 4.0 * a * a * a + 27.0 * b * b;
  if (disc > -kDiscriminantTol) {
    throw MonostableError("tilt gamma=" + std::to_string(p.gamma) +
                          " leaves fewer than three critical points");
  }
  const double m = 2.0 * std::sqrt(-a / 3.0);
  const double arg = std::clamp(3.0 * b / (a * m), -1.0, 1.0);
  const double theta = std::acos(arg) / 3.0;
  std::array<double, 3> roots{};
  for (int k = 0; k < 3; ++k) {
    roots[k] = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
  }
  std::sort(roots.begin(), roots.end());

  LandscapeSummary s;
  s.wells = {roots[0], roots[2]};
  s.barrier_x = roots[1];
  const double v0 = v(p, s.wells[0]);
  const double v1 = v(p, s.wells[1]);
  s.v_min = std::min(v0, v1);
  s.barrier_height = std::max(0.0, v(p, s.barrier_x) - std::max(v0, v1));
  return s;
}

double gating_potential(const PotentialParams& p, const LandscapeSummary& s, double x) noexcept {
  return std::max(0.0, v(p, x) - s.v_min);
}

double gated_r(const GatingParams& gp, double v_tilde) noexcept {
  return gp.r0 * (1.0 + gp.g * v_tilde);
}

double naive_r(const GatingParams& gp, const LandscapeSummary& s, double x) noexcept {
  const double d = std::min(std::abs(x - s.wells[0]), std::abs(x - s.wells[1]));
  return gp.r0 * (1.0 + gp.g * d * d);
}

KramersQuantities kramers_quantities(const PotentialParams& p, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kramers_quantities requires sigma > 0");
  const LandscapeSummary s = landscape(p);
  KramersQuantities k;
  k.t_eff = 0.5 * sigma * sigma;
  k.pi1 = s.barrier_height / k.t_eff;
  const double shallow =
      v(p, s.wells[0]) >= v(p, s.wells[1]) ? s.wells[0] : s.wells[1];
  const double curv_well = v_second(p, shallow);
  const double curv_barrier = std::abs(v_second(p, s.barrier_x));
  k.tau = 2.0 * std::numbers::pi / std::sqrt(curv_well * curv_barrier) * std::exp(k.pi1);
  return k;
}

}  // namespace pgate
