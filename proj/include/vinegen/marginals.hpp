#pragma once

#include "error.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace vinegen {

//! Univariate Gaussian kernel density estimate with a tabulated cdf.
//!
//! The density is the exact kernel sum. The cdf is obtained by trapezoid
//! integration of the density on a fixed grid spanning the data range
//! extended by four bandwidths on each side, normalized to end at one, and
//! linearly interpolated between grid points. Quantiles invert the
//! interpolated cdf.
class KernelMarginal
{
public:
  static constexpr size_t grid_size = 512;
  static constexpr size_t min_points = 10;
  static constexpr double tail_bandwidths = 4.0;

  KernelMarginal() = default;

  //! fits the estimator; a non-positive or NaN bandwidth selects the
  //! normal reference rule.
  static KernelMarginal fit(std::span<const double> x,
                            double bandwidth = std::numeric_limits<double>::quiet_NaN())
  {
    if (x.size() < min_points)
      throw DegenerateInputError("fit_marginal: need at least 10 observations, got " +
                                 std::to_string(x.size()));
    for (double v : x)
      if (!std::isfinite(v))
        throw DegenerateInputError("fit_marginal: non-finite observation");
    if (!(bandwidth > 0.0))
      bandwidth = reference_bandwidth(x);
    return KernelMarginal(std::vector<double>(x.begin(), x.end()), bandwidth);
  }

  //! h = 1.06 min(sd, IQR / 1.34) n^(-1/5); falls back to sd when the IQR
  //! vanishes.
  static double reference_bandwidth(std::span<const double> x)
  {
    double s = stats::sd(x);
    if (!(s > 0.0))
      throw DegenerateInputError("fit_marginal: zero sample variance");
    std::vector<double> v(x.begin(), x.end());
    double iqr = stats::quantile(v, 0.75) - stats::quantile(v, 0.25);
    double scale = iqr > 0.0 ? std::min(s, iqr / 1.34) : s;
    return 1.06 * scale * std::pow(static_cast<double>(x.size()), -0.2);
  }

  //! rebuilds a fitted marginal from its sample and bandwidth.
  KernelMarginal(std::vector<double> sample_points, double bandwidth)
    : points_(std::move(sample_points))
    , bandwidth_(bandwidth)
  {
    if (!(bandwidth_ > 0.0))
      throw DegenerateInputError("KernelMarginal: bandwidth must be positive");
    if (points_.size() < min_points)
      throw DegenerateInputError("KernelMarginal: need at least 10 observations");
    std::sort(points_.begin(), points_.end());
    if (points_.front() == points_.back())
      throw DegenerateInputError("fit_marginal: zero sample variance");
    build_grid();
  }

  double pdf(double x) const
  {
    double s = 0.0;
    for (double p : points_)
      s += stats::dnorm((x - p) / bandwidth_);
    return s / (static_cast<double>(points_.size()) * bandwidth_);
  }

  double cdf(double x) const
  {
    if (x <= grid_.front())
      return 0.0;
    if (x >= grid_.back())
      return 1.0;
    size_t k = static_cast<size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) -
                                   grid_.begin()) - 1;
    double t = (x - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return cdf_values_[k] + t * (cdf_values_[k + 1] - cdf_values_[k]);
  }

  //! inverse of the interpolated cdf; u must lie in (0, 1).
  double quantile(double u) const
  {
    if (!(u > 0.0 && u < 1.0))
      throw DomainError("inverse_pit: u must lie in (0,1), got " + std::to_string(u));
    // first grid index with cdf >= u
    size_t k = static_cast<size_t>(
      std::lower_bound(cdf_values_.begin(), cdf_values_.end(), u) - cdf_values_.begin());
    k = std::clamp<size_t>(k, 1, grid_size - 1);
    double lo = cdf_values_[k - 1], hi = cdf_values_[k];
    if (hi <= lo)
      return 0.5 * (grid_[k - 1] + grid_[k]);
    double t = (u - lo) / (hi - lo);
    return grid_[k - 1] + t * (grid_[k] - grid_[k - 1]);
  }

  //! probability integral transform, clamped to [1e-10, 1 - 1e-10].
  std::vector<double> pit(std::span<const double> x) const
  {
    std::vector<double> u(x.size());
    for (size_t i = 0; i < x.size(); ++i)
      u[i] = clamp_unit(cdf(x[i]));
    return u;
  }

  std::vector<double> inverse_pit(std::span<const double> u) const
  {
    std::vector<double> x(u.size());
    for (size_t i = 0; i < u.size(); ++i)
      x[i] = quantile(u[i]);
    return x;
  }

  const std::vector<double>& sample_points() const { return points_; }
  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& cdf_values() const { return cdf_values_; }

private:
  void build_grid()
  {
    double lo = points_.front() - tail_bandwidths * bandwidth_;
    double hi = points_.back() + tail_bandwidths * bandwidth_;
    grid_.resize(grid_size);
    std::vector<double> dens(grid_size);
    for (size_t k = 0; k < grid_size; ++k) {
      grid_[k] = lo + (hi - lo) * static_cast<double>(k) / (grid_size - 1);
      dens[k] = pdf(grid_[k]);
    }
    cdf_values_.assign(grid_size, 0.0);
    for (size_t k = 1; k < grid_size; ++k)
      cdf_values_[k] =
        cdf_values_[k - 1] + 0.5 * (dens[k] + dens[k - 1]) * (grid_[k] - grid_[k - 1]);
    double total = cdf_values_.back();
    for (double& c : cdf_values_)
      c /= total;
    cdf_values_.back() = 1.0;
  }

  std::vector<double> points_;
  double bandwidth_{ 0.0 };
  std::vector<double> grid_;
  std::vector<double> cdf_values_;
};

} // namespace vinegen
