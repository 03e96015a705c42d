#pragma once

#include <array>

namespace pgate {

/// Tilted Ginzburg-Landau quartic V(x) = -(alpha/2) x^2 + (beta/4) x^4 - gamma x.
struct PotentialParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;

  /// Throws ConfigError unless alpha > 0 and beta > 0.
  void validate() const;

  friend bool operator==(const PotentialParams&, const PotentialParams&) = default;
};

/// Critical-point structure of a bistable landscape.
struct LandscapeSummary {
  std::array<double, 2> wells{};  // ascending
  double barrier_x = 0.0;
  double barrier_height = 0.0;    // V(barrier) - V(shallower well)
  double v_min = 0.0;             // V at the deeper well
};

/// Gating hyperparameters: sensitivity g, penalty strength lambda, nominal R0.
struct GatingParams {
  double g = 10.0;
  double lambda = 0.1;
  double r0 = 0.09;
};

double v(const PotentialParams& p, double x) noexcept;
/// f(x) = -V'(x) = alpha x - beta x^3 + gamma.
double drift(const PotentialParams& p, double x) noexcept;
/// f'(x) = alpha - 3 beta x^2.
double drift_slope(const PotentialParams& p, double x) noexcept;
double v_second(const PotentialParams& p, double x) noexcept;

/// Solves the drift cubic in closed form. Throws MonostableError when it has
/// fewer than three real roots.
LandscapeSummary landscape(const PotentialParams& p);

/// V shifted so its global minimum is exactly zero.
double gating_potential(const PotentialParams& p, const LandscapeSummary& s, double x) noexcept;

/// R0 (1 + g Vtilde).
double gated_r(const GatingParams& gp, double v_tilde) noexcept;

/// R0 (1 + g d^2) with d the distance to the nearest well.
double naive_r(const GatingParams& gp, const LandscapeSummary& s, double x) noexcept;

struct KramersQuantities {
  double t_eff = 0.0;  // sigma^2 / 2
  double pi1 = 0.0;    // barrier height over t_eff
  double tau = 0.0;    // Eyring-Kramers mean escape time
};

/// Escape-time scales for noise intensity sigma. Escape is taken from the
/// shallower well, the one whose barrier height the summary reports.
KramersQuantities kramers_quantities(const PotentialParams& p, double sigma);

}  // namespace pgate
