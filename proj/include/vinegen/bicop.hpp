#pragma once

#include "error.hpp"
#include "stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vinegen {

enum class Family
{
  independence,
  gaussian,
  tll //!< transformation kernel estimator
};

inline std::string
to_string(Family f)
{
  switch (f) {
    case Family::independence:
      return "indep";
    case Family::gaussian:
      return "gaussian";
    case Family::tll:
      return "tll";
  }
  return "unknown";
}

inline Family
family_from_string(const std::string& s)
{
  if (s == "indep" || s == "independence")
    return Family::independence;
  if (s == "gaussian")
    return Family::gaussian;
  if (s == "tll")
    return Family::tll;
  throw FormatError("unknown copula family '" + s + "' (expected indep|gaussian|tll)");
}

//! Tabulated copula density on an m x m grid of (0,1)^2.
//! values[i * m + j] is the density at (nodes[i], nodes[j]).
struct DensityGrid
{
  std::vector<double> nodes;
  std::vector<double> values;

  size_t size() const { return nodes.size(); }
  double at(size_t i, size_t j) const { return values[i * nodes.size() + j]; }

  //! default nodes: Phi(z) for z equally spaced on [-3.25, 3.25].
  static std::vector<double> default_nodes(size_t m = 30)
  {
    std::vector<double> nodes(m);
    for (size_t k = 0; k < m; ++k) {
      double z = -3.25 + 6.5 * static_cast<double>(k) / static_cast<double>(m - 1);
      nodes[k] = stats::pnorm(z);
    }
    return nodes;
  }
};

//! Bivariate copula: independence, Gaussian, or a nonparametric
//! transformation kernel estimate stored as a density grid.
//!
//! Argument convention: hfunc2(u1, u2) = P[U1 <= u1 | U2 = u2] and
//! hfunc1(u1, u2) = P[U2 <= u2 | U1 = u1].
class BivariateCopula
{
public:
  static constexpr size_t min_fit_points = 30;
  static constexpr double max_abs_rho = 0.99;
  static constexpr double bisection_tol = 1e-8;
  static constexpr int bisection_max_iter = 200;

  BivariateCopula() = default;

  static BivariateCopula independence() { return {}; }

  static BivariateCopula gaussian(double rho)
  {
    if (!(std::abs(rho) < 1.0))
      throw DomainError("gaussian copula: |rho| must be < 1");
    BivariateCopula c;
    c.family_ = Family::gaussian;
    c.rho_ = rho;
    return c;
  }

  //! builds a kernel copula from a grid; values are renormalized to integrate
  //! to one over the unit square unless `normalize` is false (grids that were
  //! normalized before, e.g. when loading a saved model).
  static BivariateCopula from_grid(DensityGrid grid, bool normalize = true)
  {
    const size_t m = grid.size();
    if (m < 2 || grid.values.size() != m * m)
      throw FormatError("density grid: expected m x m values");
    for (size_t k = 0; k < m; ++k) {
      if (!(grid.nodes[k] > 0.0 && grid.nodes[k] < 1.0) ||
          (k > 0 && !(grid.nodes[k] > grid.nodes[k - 1])))
        throw FormatError("density grid: nodes must be strictly increasing in (0,1)");
    }
    for (double v : grid.values)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw FormatError("density grid: values must be finite and nonnegative");
    if (normalize)
      normalize_margins(grid);
    BivariateCopula c;
    c.family_ = Family::tll;
    c.grid_ = std::move(grid);
    c.build_interpolant(normalize);
    return c;
  }

  //! Rescales rows and columns of the grid alternately until the bilinear
  //! interpolant (with constant extension to the border) has uniform
  //! margins, which also makes it integrate to one.
  static void normalize_margins(DensityGrid& grid, int max_iter = 1000, double tol = 1e-12)
  {
    const size_t m = grid.size();
    const auto& x = grid.nodes;
    // integration weights of the piecewise-linear interpolant over [0,1]
    std::vector<double> w(m);
    for (size_t k = 0; k < m; ++k) {
      double left = k == 0 ? x[0] + 0.5 * (x[1] - x[0]) : 0.5 * (x[k] - x[k - 1]);
      double right = k + 1 == m ? (1.0 - x[k]) + 0.5 * (x[k] - x[k - 1]) : 0.5 * (x[k + 1] - x[k]);
      w[k] = k == 0 ? left : (k + 1 == m ? right : left + right);
    }
    auto& v = grid.values;
    for (int it = 0; it < max_iter; ++it) {
      double dev = 0.0;
      for (size_t i = 0; i < m; ++i) {
        double r = 0.0;
        for (size_t j = 0; j < m; ++j)
          r += w[j] * v[i * m + j];
        if (!(r > 0.0))
          throw NumericError("density grid has an empty row");
        dev = std::max(dev, std::abs(r - 1.0));
        for (size_t j = 0; j < m; ++j)
          v[i * m + j] /= r;
      }
      for (size_t j = 0; j < m; ++j) {
        double c = 0.0;
        for (size_t i = 0; i < m; ++i)
          c += w[i] * v[i * m + j];
        dev = std::max(dev, std::abs(c - 1.0));
        for (size_t i = 0; i < m; ++i)
          v[i * m + j] /= c;
      }
      if (dev < tol)
        break;
    }
  }

  //! fits a copula of the given family to pseudo-observations.
  static BivariateCopula fit(std::span<const double> u1,
                             std::span<const double> u2,
                             Family family)
  {
    check_data(u1, u2);
    switch (family) {
      case Family::independence:
        return independence();
      case Family::gaussian:
        return fit_gaussian(u1, u2);
      case Family::tll:
        return fit_tll(u1, u2);
    }
    return independence();
  }

  Family family() const { return family_; }
  double rho() const { return rho_; }
  const DensityGrid& grid() const { return grid_; }
  //! non-empty when the fit hit a boundary (e.g. perfectly monotone data).
  const std::string& warning() const { return warning_; }

  double pdf(double u1, double u2) const
  {
    check_unit(u1, "pdf");
    check_unit(u2, "pdf");
    switch (family_) {
      case Family::independence:
        return 1.0;
      case Family::gaussian: {
        double z1 = stats::qnorm(u1), z2 = stats::qnorm(u2);
        double r2 = 1.0 - rho_ * rho_;
        double q = (rho_ * rho_ * (z1 * z1 + z2 * z2) - 2.0 * rho_ * z1 * z2) / (2.0 * r2);
        return std::exp(-q) / std::sqrt(r2);
      }
      case Family::tll:
        return interpolate(u1, u2);
    }
    return 1.0;
  }

  //! P[U1 <= u1 | U2 = u2]
  double hfunc2(double u1, double u2) const
  {
    check_unit(u1, "hfunc");
    check_unit(u2, "hfunc");
    switch (family_) {
      case Family::independence:
        return u1;
      case Family::gaussian:
        return stats::pnorm((stats::qnorm(u1) - rho_ * stats::qnorm(u2)) /
                            std::sqrt(1.0 - rho_ * rho_));
      case Family::tll:
        return slice(u2, /* along_first = */ true).cdf(u1);
    }
    return u1;
  }

  //! P[U2 <= u2 | U1 = u1]
  double hfunc1(double u1, double u2) const
  {
    check_unit(u1, "hfunc");
    check_unit(u2, "hfunc");
    switch (family_) {
      case Family::independence:
        return u2;
      case Family::gaussian:
        return stats::pnorm((stats::qnorm(u2) - rho_ * stats::qnorm(u1)) /
                            std::sqrt(1.0 - rho_ * rho_));
      case Family::tll:
        return slice(u1, /* along_first = */ false).cdf(u2);
    }
    return u2;
  }

  //! u1 such that hfunc2(u1, u2) = p
  double hinv2(double p, double u2) const
  {
    check_unit(p, "hinv");
    check_unit(u2, "hinv");
    switch (family_) {
      case Family::independence:
        return p;
      case Family::gaussian:
        return gaussian_hinv(p, u2);
      case Family::tll:
        return slice(u2, true).inverse(p);
    }
    return p;
  }

  //! u2 such that hfunc1(u1, u2) = p
  double hinv1(double p, double u1) const
  {
    check_unit(p, "hinv");
    check_unit(u1, "hinv");
    switch (family_) {
      case Family::independence:
        return p;
      case Family::gaussian:
        return gaussian_hinv(p, u1);
      case Family::tll:
        return slice(u1, false).inverse(p);
    }
    return p;
  }

  //! which = 2: P[U1 <= u1 | U2 = u2]; which = 1: P[U2 <= u2 | U1 = u1].
  double hfunc(double u1, double u2, int which) const
  {
    check_which(which);
    return which == 2 ? hfunc2(u1, u2) : hfunc1(u1, u2);
  }

  //! inverts hfunc in its conditioned argument; `conditioning` is u2 for
  //! which = 2 and u1 for which = 1.
  double hinv(double p, double conditioning, int which) const
  {
    check_which(which);
    return which == 2 ? hinv2(p, conditioning) : hinv1(p, conditioning);
  }

  double loglik(std::span<const double> u1, std::span<const double> u2) const
  {
    if (u1.size() != u2.size())
      throw DimensionError("loglik: inputs have different lengths");
    if (family_ == Family::independence) {
      for (size_t i = 0; i < u1.size(); ++i) {
        check_unit(u1[i], "loglik");
        check_unit(u2[i], "loglik");
      }
      return 0.0;
    }
    double ll = 0.0;
    for (size_t i = 0; i < u1.size(); ++i)
      ll += std::log(std::max(pdf(u1[i], u2[i]), 1e-20));
    return ll;
  }

  //! draws n pairs by inverse transform sampling; column 0 holds u1.
  Matrix simulate(size_t n, uint64_t seed) const
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix u(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      double w1 = clamp_unit(unif(rng));
      double w2 = clamp_unit(unif(rng));
      u(i, 1) = w2;
      u(i, 0) = clamp_unit(hinv2(w1, w2));
    }
    return u;
  }

private:
  // piecewise-linear conditional density along one axis, with its exact
  // cumulative integral
  struct Slice
  {
    const std::vector<double>* knots;
    std::vector<double> dens;
    std::vector<double> cum;

    double integral(double x) const
    {
      const auto& k = *knots;
      size_t a = std::min<size_t>(
        static_cast<size_t>(std::upper_bound(k.begin(), k.end(), x) - k.begin()) - 1,
        k.size() - 2);
      double dx = x - k[a];
      double slope = (dens[a + 1] - dens[a]) / (k[a + 1] - k[a]);
      return cum[a] + dx * (dens[a] + 0.5 * slope * dx);
    }

    double cdf(double x) const
    {
      double total = cum.back();
      if (!(total > 0.0))
        return x;
      return std::clamp(integral(x) / total, 0.0, 1.0);
    }

    double inverse(double p) const
    {
      // the bracket is shrunk to machine precision: where the conditional
      // density is tiny, |h - p| < tol says little about the argument
      double lo = 0.0, hi = 1.0, mid = 0.5;
      for (int it = 0; it < bisection_max_iter && hi - lo > 1e-15; ++it) {
        mid = 0.5 * (lo + hi);
        double h = cdf(mid);
        if (h == p)
          break;
        (h < p ? lo : hi) = mid;
      }
      return clamp_unit(mid);
    }
  };

  static void check_unit(double u, const char* what)
  {
    if (!(u > 0.0 && u < 1.0))
      throw DomainError(std::string(what) + ": argument must lie in (0,1), got " +
                        std::to_string(u));
  }

  static void check_which(int which)
  {
    if (which != 1 && which != 2)
      throw DomainError("hfunc: which must be 1 or 2");
  }

  static void check_data(std::span<const double> u1, std::span<const double> u2)
  {
    if (u1.size() != u2.size())
      throw DimensionError("bicop fit: inputs have different lengths");
    if (u1.size() < min_fit_points)
      throw DegenerateInputError("bicop fit: need at least 30 observations");
    for (size_t i = 0; i < u1.size(); ++i) {
      check_unit(u1[i], "bicop fit");
      check_unit(u2[i], "bicop fit");
    }
  }

  double gaussian_hinv(double p, double cond) const
  {
    double z = stats::qnorm(p) * std::sqrt(1.0 - rho_ * rho_) + rho_ * stats::qnorm(cond);
    return clamp_unit(stats::pnorm(z));
  }

  static BivariateCopula fit_gaussian(std::span<const double> u1,
                                      std::span<const double> u2)
  {
    double tau = stats::kendall_tau(u1, u2);
    double rho = std::sin(std::numbers::pi * tau / 2.0);
    BivariateCopula c = gaussian(std::clamp(rho, -max_abs_rho, max_abs_rho));
    if (std::abs(rho) > max_abs_rho)
      c.warning_ = "gaussian fit: |tau| = " + std::to_string(std::abs(tau)) +
                   ", rho clamped to " + std::to_string(c.rho_);
    return c;
  }

  static BivariateCopula fit_tll(std::span<const double> u1,
                                 std::span<const double> u2)
  {
    const size_t n = u1.size();
    std::vector<double> z1(n), z2(n);
    for (size_t i = 0; i < n; ++i) {
      z1[i] = stats::qnorm(u1[i]);
      z2[i] = stats::qnorm(u2[i]);
    }
    double r = stats::pearson_cor(z1, z2);
    std::string warning;
    if (std::abs(r) > max_abs_rho) {
      warning = "tll fit: normal-score correlation clamped to +-0.99";
      r = std::clamp(r, -max_abs_rho, max_abs_rho);
    }
    // kernel covariance n^(-1/3) * [[1, r], [r, 1]]
    const double s2 = std::pow(static_cast<double>(n), -1.0 / 3.0);
    const double det = s2 * s2 * (1.0 - r * r);
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    const double a = s2 / det, b = -r * s2 / det; // inverse covariance entries

    DensityGrid grid;
    grid.nodes = DensityGrid::default_nodes();
    const size_t m = grid.nodes.size();
    std::vector<double> zg(m);
    for (size_t k = 0; k < m; ++k)
      zg[k] = stats::qnorm(grid.nodes[k]);
    grid.values.assign(m * m, 0.0);
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (size_t k = 0; k < n; ++k) {
          double d1 = zg[i] - z1[k], d2 = zg[j] - z2[k];
          s += std::exp(-0.5 * (a * d1 * d1 + 2.0 * b * d1 * d2 + a * d2 * d2));
        }
        grid.values[i * m + j] =
          norm * s / static_cast<double>(n) / (stats::dnorm(zg[i]) * stats::dnorm(zg[j]));
      }
    }
    BivariateCopula c = from_grid(std::move(grid));
    c.warning_ = warning;
    return c;
  }

  // Extends the grid with constant values at 0 and 1, normalizes the
  // bilinear interpolant to unit mass, and tabulates cumulative integrals
  // along both axes.
  void build_interpolant(bool normalize)
  {
    const size_t m = grid_.size();
    const size_t e = m + 2;
    knots_.assign(e, 0.0);
    knots_.back() = 1.0;
    std::copy(grid_.nodes.begin(), grid_.nodes.end(), knots_.begin() + 1);
    ext_.assign(e * e, 0.0);
    for (size_t i = 0; i < e; ++i) {
      size_t gi = std::clamp<size_t>(i, 1, m) - 1;
      for (size_t j = 0; j < e; ++j) {
        size_t gj = std::clamp<size_t>(j, 1, m) - 1;
        ext_[i * e + j] = grid_.at(gi, gj);
      }
    }
    // trapezoid integral of the bilinear interpolant over [0,1]^2
    double total = 0.0;
    for (size_t i = 0; i + 1 < e; ++i) {
      for (size_t j = 0; j + 1 < e; ++j) {
        double cell = (knots_[i + 1] - knots_[i]) * (knots_[j + 1] - knots_[j]);
        total += 0.25 * cell *
                 (ext_[i * e + j] + ext_[(i + 1) * e + j] + ext_[i * e + j + 1] +
                  ext_[(i + 1) * e + j + 1]);
      }
    }
    if (!(total > 0.0))
      throw NumericError("density grid integrates to zero");
    if (!normalize)
      return;
    for (double& v : ext_)
      v /= total;
    for (double& v : grid_.values)
      v /= total;
  }

  double interpolate(double u1, double u2) const
  {
    const size_t e = knots_.size();
    auto locate = [&](double x) {
      size_t a = static_cast<size_t>(std::upper_bound(knots_.begin(), knots_.end(), x) -
                                     knots_.begin()) - 1;
      a = std::min(a, e - 2);
      return std::pair{ a, (x - knots_[a]) / (knots_[a + 1] - knots_[a]) };
    };
    auto [i, s] = locate(u1);
    auto [j, t] = locate(u2);
    return (1 - s) * (1 - t) * ext_[i * e + j] + s * (1 - t) * ext_[(i + 1) * e + j] +
           (1 - s) * t * ext_[i * e + j + 1] + s * t * ext_[(i + 1) * e + j + 1];
  }

  // conditional density profile at fixed `cond`; along_first = true varies
  // the first argument with the second fixed at `cond`
  Slice slice(double cond, bool along_first) const
  {
    const size_t e = knots_.size();
    size_t b = static_cast<size_t>(std::upper_bound(knots_.begin(), knots_.end(), cond) -
                                   knots_.begin()) - 1;
    b = std::min(b, e - 2);
    double t = (cond - knots_[b]) / (knots_[b + 1] - knots_[b]);
    Slice sl{ &knots_, std::vector<double>(e), std::vector<double>(e, 0.0) };
    for (size_t k = 0; k < e; ++k) {
      double lo = along_first ? ext_[k * e + b] : ext_[b * e + k];
      double hi = along_first ? ext_[k * e + b + 1] : ext_[(b + 1) * e + k];
      sl.dens[k] = (1 - t) * lo + t * hi;
    }
    for (size_t k = 1; k < e; ++k)
      sl.cum[k] = sl.cum[k - 1] + 0.5 * (sl.dens[k] + sl.dens[k - 1]) * (knots_[k] - knots_[k - 1]);
    return sl;
  }

  Family family_{ Family::independence };
  double rho_{ 0.0 };
  DensityGrid grid_;
  std::string warning_;
  std::vector<double> knots_;
  std::vector<double> ext_;
};

} // namespace vinegen
