#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgate/potential.hpp"

namespace pgate {

enum class SimMode { Forced, Kramers };

std::string to_string(SimMode m);
SimMode sim_mode_from_string(const std::string& s);

/// External push used to drive well-to-well transitions in Forced mode.
/// At each epoch a constant drift of amplitude_factor * dV / (well span) is
/// applied toward the opposite well for `duration` consecutive steps.
struct ForcingSchedule {
  std::vector<std::size_t> epochs;  // empty: floor(T/3) and floor(2T/3)
  std::size_t duration = 10;
  double amplitude_factor = 4.0;

  std::vector<std::size_t> resolved_epochs(std::size_t n_steps) const;
};

struct SimConfig {
  PotentialParams params;
  double sigma = 0.3;
  double dt = 1.0;
  std::size_t n_steps = 150;
  double x0 = -1.0;
  SimMode mode = SimMode::Forced;
  double outlier_prob = 0.10;
  double outlier_scale = 100.0;
  double r0 = 0.09;
  std::uint64_t seed = 0;
  /// Euler-Maruyama sub-steps per observation interval; 0 selects the
  /// smallest count that keeps h * max|f'(well)| <= kAutoStepCourant.
  std::size_t substeps = 0;
  ForcingSchedule forcing;

  /// Throws ConfigError on any violated precondition, including Euler
  /// stability (h * max|f'(well)| < 2) for the resolved sub-step.
  void validate() const;
  std::size_t resolved_substeps() const;
};

inline constexpr double kAutoStepCourant = 0.5;

struct Trajectory {
  std::vector<double> truth;
  std::vector<double> obs;
  std::vector<bool> outlier_flags;
  std::uint64_t seed = 0;
  std::size_t n_crossings = 0;
};

struct Observations {
  std::vector<double> obs;
  std::vector<bool> outlier_flags;
};

/// Latent path x_0..x_{T-1}, x_0 = cfg.x0. Throws DivergenceError when
/// |x| exceeds ten times the outermost well.
std::vector<double> simulate_process(const SimConfig& cfg);

/// Mixture observation channel: N(0, R0) with probability 1-p, otherwise
/// N(0, R0 + outlier_scale * R0) and flagged. Uses its own seed-derived stream
/// so it can contaminate any clean series.
Observations observe(const std::vector<double>& truth, const SimConfig& cfg);

/// simulate_process followed by observe.
Trajectory simulate(const SimConfig& cfg);

/// Unforced run; nullopt when the path shows fewer than min_crossings sign
/// changes (the caller draws a new seed).
std::optional<Trajectory> simulate_kramers(const SimConfig& cfg, std::size_t min_crossings);

std::size_t count_zero_crossings(const std::vector<double>& x) noexcept;

}  // namespace pgate
