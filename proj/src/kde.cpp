#include "pgate/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pgate/errors.hpp"
#include "pgate/stats.hpp"

namespace pgate {

double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("bandwidth needs at least two points");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double spread = stddev(x);
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0)) throw ZeroVariance("bandwidth: sample has zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

Kde::Kde(std::vector<double> sample, double bandwidth) : sample_(std::move(sample)), h_(bandwidth) {
  if (sample_.empty()) throw ConfigError("kde needs a nonempty sample");
  if (!(h_ > 0.0)) throw ConfigError("kde bandwidth must be > 0");
}

Kde::Kde(std::vector<double> sample) : Kde(sample, silverman_bandwidth(sample)) {}

double Kde::operator()(double x) const noexcept {
  const double norm = 1.0 / (static_cast<double>(sample_.size()) * h_ * std::sqrt(2.0 * std::numbers::pi));
  double s = 0.0;
  for (double xi : sample_) {
    const double u = (x - xi) / h_;
    s += std::exp(-0.5 * u * u);
  }
  return s * norm;
}

DensityGrid evaluate_on_grid(const Kde& kde, std::size_t n_points) {
  if (n_points < 3) throw ConfigError("density grid needs at least 3 points");
  const auto [lo_it, hi_it] = std::minmax_element(kde.sample().begin(), kde.sample().end());
  const double lo = *lo_it - 3.0 * kde.bandwidth();
  const double hi = *hi_it + 3.0 * kde.bandwidth();
  DensityGrid g;
  g.x.resize(n_points);
  g.density.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    g.x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    g.density[i] = kde(g.x[i]);
  }
  return g;
}

std::vector<Peak> find_peaks(const DensityGrid& g, double min_prominence_frac) {
  const auto& d = g.density;
  const std::size_t n = d.size();
  std::vector<Peak> out;
  if (n < 3) return out;
  const double top = *std::max_element(d.begin(), d.end());
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(d[i] > d[i - 1] && d[i] >= d[i + 1])) continue;
    // Walk outward until a higher point; the lowest point passed on each side
    // bounds the peak's base.
    double left_min = d[i];
    std::size_t j = i;
    while (j > 0 && d[j - 1] <= d[i]) left_min = std::min(left_min, d[--j]);
    if (j == 0) left_min = std::min(left_min, d[0]);
    double right_min = d[i];
    std::size_t k = i;
    while (k + 1 < n && d[k + 1] <= d[i]) right_min = std::min(right_min, d[++k]);
    const double prom = d[i] - std::max(left_min, right_min);
    if (prom >= min_prominence_frac * top) out.push_back({i, g.x[i], d[i], prom});
  }
  return out;
}

}  // namespace pgate
