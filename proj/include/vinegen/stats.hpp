#pragma once

#include "error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace vinegen {

//! observations are stored row-wise: n rows, d columns.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

//! lower bound of pseudo-observations; values are kept in
//! [unit_eps, 1 - unit_eps] so that normal quantiles stay finite.
inline constexpr double unit_eps = 1e-10;

inline double
clamp_unit(double u)
{
  return std::clamp(u, unit_eps, 1.0 - unit_eps);
}

//! statistical helper functions
namespace stats {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;

//! standard normal density
inline double
dnorm(double x)
{
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

//! standard normal cdf
inline double
pnorm(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

//! standard normal quantile; u must lie in (0, 1).
inline double
qnorm(double u)
{
  static const boost::math::normal dist;
  return boost::math::quantile(dist, u);
}

inline double
mean(std::span<const double> x)
{
  return std::accumulate(x.begin(), x.end(), 0.0) /
         static_cast<double>(x.size());
}

//! sample standard deviation (denominator n - 1).
inline double
sd(std::span<const double> x)
{
  double m = mean(x);
  double ss = 0.0;
  for (double v : x)
    ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

//! empirical quantile with linear interpolation (type 7 in R).
inline double
quantile(std::vector<double> x, double p)
{
  std::sort(x.begin(), x.end());
  double h = (static_cast<double>(x.size()) - 1.0) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double
pearson_cor(std::span<const double> x, std::span<const double> y)
{
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// merge sort on y counting the number of inversions
inline uint64_t
count_swaps(std::vector<double>& y, std::vector<double>& buf, size_t lo,
            size_t hi)
{
  if (hi - lo < 2)
    return 0;
  size_t mid = lo + (hi - lo) / 2;
  uint64_t swaps = count_swaps(y, buf, lo, mid) + count_swaps(y, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += mid - i;
      buf[k++] = y[j++];
    } else {
      buf[k++] = y[i++];
    }
  }
  while (i < mid)
    buf[k++] = y[i++];
  while (j < hi)
    buf[k++] = y[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, y.begin() + lo);
  return swaps;
}

// number of pairs within runs of equal values of a sorted sequence
template<class Eq>
uint64_t
tied_pairs(size_t n, Eq&& equal)
{
  uint64_t ties = 0, run = 1;
  for (size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

} // namespace detail

//! Kendall's tau: (concordant - discordant) / (n (n - 1) / 2), ties counted
//! as neither. Uses Knight's O(n log n) algorithm.
inline double
kendall_tau(std::span<const double> x, std::span<const double> y)
{
  const size_t n = x.size();
  if (y.size() != n)
    throw DimensionError("kendall_tau: inputs have different lengths");
  if (n < 2)
    throw DegenerateInputError("kendall_tau: need at least 2 observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
  };
  if (constant(x) || constant(y))
    throw DegenerateInputError("kendall_tau: constant input");

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = x[perm[i]];
    ys[i] = y[perm[i]];
  }
  uint64_t ties_x =
    detail::tied_pairs(n, [&](size_t a, size_t b) { return xs[a] == xs[b]; });
  uint64_t ties_xy = detail::tied_pairs(
    n, [&](size_t a, size_t b) { return xs[a] == xs[b] && ys[a] == ys[b]; });
  std::vector<double> buf(n);
  uint64_t swaps = detail::count_swaps(ys, buf, 0, n);
  uint64_t ties_y =
    detail::tied_pairs(n, [&](size_t a, size_t b) { return ys[a] == ys[b]; });

  const double total = static_cast<double>(n) * (n - 1) / 2.0;
  double diff = total - static_cast<double>(ties_x) -
                static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                2.0 * static_cast<double>(swaps);
  return diff / total;
}

//! result of a one-sample Kolmogorov-Smirnov test.
struct KsResult
{
  double statistic;
  double p_value;
};

//! asymptotic Kolmogorov survival function with the small-sample
//! correction of Stephens (1970).
inline double
kolmogorov_pvalue(double d, size_t n)
{
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2)
    return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16)
      break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

//! one-sample KS test of x against a continuous cdf.
inline KsResult
ks_test(std::vector<double> x, const std::function<double(double)>& cdf)
{
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max({ d, (i + 1) / n - f, f - i / n });
  }
  return { d, kolmogorov_pvalue(d, x.size()) };
}

//! KS test against the standard uniform distribution.
inline KsResult
ks_uniform(std::vector<double> u)
{
  return ks_test(std::move(u), [](double v) { return std::clamp(v, 0.0, 1.0); });
}

//! copies column j of a matrix into a std::vector.
inline std::vector<double>
column(const Matrix& m, Eigen::Index j)
{
  std::vector<double> c(static_cast<size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    c[static_cast<size_t>(i)] = m(i, j);
  return c;
}

} // namespace stats
} // namespace vinegen
