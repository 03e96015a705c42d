#pragma once

#include <span>
#include <vector>

namespace pgate {

inline constexpr double kPeakProminenceFrac = 0.10;
inline constexpr double kDensityFloorFrac = 0.01;
inline constexpr std::size_t kKdeGridPoints = 512;

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> x);

/// Gaussian-kernel density estimate on a sample.
class Kde {
 public:
  Kde(std::vector<double> sample, double bandwidth);
  explicit Kde(std::vector<double> sample);

  double operator()(double x) const noexcept;
  double bandwidth() const noexcept { return h_; }
  const std::vector<double>& sample() const noexcept { return sample_; }

 private:
  std::vector<double> sample_;
  double h_;
};

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
};

/// Evenly spaced evaluation over [min - 3h, max + 3h].
DensityGrid evaluate_on_grid(const Kde& kde, std::size_t n_points = kKdeGridPoints);

struct Peak {
  std::size_t index = 0;
  double x = 0.0;
  double height = 0.0;
  double prominence = 0.0;
};

/// Local maxima of the grid density whose topographic prominence is at least
/// min_prominence_frac of the global maximum, ordered by position.
std::vector<Peak> find_peaks(const DensityGrid& g, double min_prominence_frac = kPeakProminenceFrac);

}  // namespace pgate
