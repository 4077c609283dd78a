#pragma once

#include "error.hpp"
#include "parallel.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vinegen {

//! log-density evaluator: one value per row.
using LogDensity = std::function<Vector(const Matrix&)>;

//! Evaluation summary; only metrics that were computed are set.
struct EvalReport
{
  std::optional<double> mmd;
  std::optional<double> mmd_bandwidth;
  std::optional<double> coverage;
  std::optional<double> coverage_alpha;
  std::optional<double> mean_loglik;
  std::optional<double> c2st_accuracy;
  size_t n_a{ 0 };
  size_t n_b{ 0 };
  std::optional<uint64_t> seed;
};

namespace metrics {

namespace detail {

inline void
check_same_dim(const Matrix& x, const Matrix& y, const char* what)
{
  if (x.cols() != y.cols())
    throw DimensionError(std::string(what) + ": samples have " + std::to_string(x.cols()) +
                         " and " + std::to_string(y.cols()) + " columns");
}

// squared distances between the rows of a and b, row block [begin, end) of a
inline Matrix
sq_dist_block(const Matrix& a, const Matrix& b, Eigen::Index begin, Eigen::Index end)
{
  Matrix d(end - begin, b.rows());
  for (Eigen::Index i = begin; i < end; ++i)
    d.row(i - begin) = (b.rowwise() - a.row(i)).rowwise().squaredNorm().transpose();
  return d;
}

// sum of exp(-|a_i - b_j|^2 / (2 s^2)); rows are processed in blocks whose
// partial sums are added in a fixed order
inline double
kernel_sum(const Matrix& a, const Matrix& b, double bandwidth)
{
  const Eigen::Index block = 64;
  const size_t blocks = static_cast<size_t>((a.rows() + block - 1) / block);
  std::vector<double> partial(blocks, 0.0);
  const double scale = -0.5 / (bandwidth * bandwidth);
  parallel_for(blocks, [&](size_t k) {
    Eigen::Index begin = static_cast<Eigen::Index>(k) * block;
    Eigen::Index end = std::min(a.rows(), begin + block);
    partial[k] = (sq_dist_block(a, b, begin, end).array() * scale).exp().sum();
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

// fixed argument order so that mmd(x, y) and mmd(y, x) agree bitwise
inline bool
canonical_order(const Matrix& x, const Matrix& y)
{
  if (x.rows() != y.rows())
    return x.rows() < y.rows();
  return !std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(),
                                       x.data() + x.size());
}

} // namespace detail

//! median pairwise Euclidean distance among the rows of the pooled sample.
inline double
median_distance(const Matrix& x, const Matrix& y)
{
  detail::check_same_dim(x, y, "median_distance");
  Matrix pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  const Eigen::Index n = pooled.rows();
  std::vector<std::vector<double>> rows(static_cast<size_t>(n));
  parallel_for(static_cast<size_t>(n), [&](size_t i) {
    auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = ii + 1; j < n; ++j)
      rows[i].push_back((pooled.row(ii) - pooled.row(j)).norm());
  });
  std::vector<double> d;
  d.reserve(static_cast<size_t>(n * (n - 1) / 2));
  for (auto& r : rows)
    d.insert(d.end(), r.begin(), r.end());
  if (d.empty())
    throw DegenerateInputError("median_distance: need at least 2 points");
  return stats::quantile(std::move(d), 0.5);
}

//! Maximum mean discrepancy with a Gaussian kernel: square root of the
//! biased (V-statistic) estimate of MMD^2. A non-positive or NaN bandwidth
//! selects the median pairwise distance of the pooled sample.
inline double
mmd(const Matrix& x,
    const Matrix& y,
    double bandwidth = std::numeric_limits<double>::quiet_NaN(),
    double* used_bandwidth = nullptr)
{
  detail::check_same_dim(x, y, "mmd");
  if (x.rows() < 2 || y.rows() < 2)
    throw DegenerateInputError("mmd: need at least 2 rows in each sample");
  if (!detail::canonical_order(x, y))
    return mmd(y, x, bandwidth, used_bandwidth);
  if (!(bandwidth > 0.0))
    bandwidth = median_distance(x, y);
  if (!(bandwidth > 0.0))
    bandwidth = 1.0;
  if (used_bandwidth)
    *used_bandwidth = bandwidth;
  const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
  double kxx = detail::kernel_sum(x, x, bandwidth) / (n * n);
  double kyy = detail::kernel_sum(y, y, bandwidth) / (m * m);
  double kxy = detail::kernel_sum(x, y, bandwidth) / (n * m);
  return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy));
}

//! Fraction of `data` inside the model's alpha highest-density region. The
//! threshold t is the empirical (1 - alpha) quantile of the model's log
//! density over its own sample, so that a fraction alpha of the sample has
//! density above t.
inline double
coverage(const LogDensity& model_logpdf,
         const Matrix& data,
         const Matrix& model_sample,
         double alpha = 0.95)
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("coverage: alpha must lie in (0,1)");
  if (model_sample.rows() < 1 || data.rows() < 1)
    throw DegenerateInputError("coverage: empty sample");
  Vector ls = model_logpdf(model_sample);
  std::vector<double> s(ls.data(), ls.data() + ls.size());
  for (double& v : s)
    if (std::isnan(v))
      v = -std::numeric_limits<double>::infinity();
  std::sort(s.begin(), s.end());
  double t = s[std::min(s.size() - 1, static_cast<size_t>(std::floor((1.0 - alpha) * s.size())))];
  Vector ld = model_logpdf(data);
  return static_cast<double>((ld.array() > t).count()) / static_cast<double>(ld.size());
}

//! (1/n) sum of log densities.
inline double
mean_loglik(const LogDensity& model_logpdf, const Matrix& data)
{
  if (data.rows() < 1)
    throw DegenerateInputError("mean_loglik: empty sample");
  return model_logpdf(data).mean();
}

//! Classifier two-sample test with a 1-nearest-neighbour classifier. The
//! larger sample is subsampled to the size of the smaller one; x is labelled
//! 0, y labelled 1, the pooled set is split 50/50 into train and test, and
//! the held-out accuracy is returned. Exact duplicates (distance 0) are not
//! used as neighbours.
inline double
c2st(const Matrix& x, const Matrix& y, uint64_t seed)
{
  detail::check_same_dim(x, y, "c2st");
  const Eigen::Index n = std::min(x.rows(), y.rows());
  if (n < 20)
    throw DegenerateInputError("c2st: need at least 20 rows per sample, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  auto pick = [&](const Matrix& m) {
    std::vector<Eigen::Index> idx(static_cast<size_t>(m.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    if (m.rows() > n) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<size_t>(n));
      std::sort(idx.begin(), idx.end());
    }
    return idx;
  };
  auto ix = pick(x), iy = pick(y);
  Matrix pooled(2 * n, x.cols());
  std::vector<int> label(static_cast<size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    pooled.row(i) = x.row(ix[static_cast<size_t>(i)]);
    pooled.row(n + i) = y.row(iy[static_cast<size_t>(i)]);
    label[static_cast<size_t>(i)] = 0;
    label[static_cast<size_t>(n + i)] = 1;
  }
  std::vector<Eigen::Index> perm(static_cast<size_t>(2 * n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const size_t n_train = static_cast<size_t>(n);
  Matrix train(n, x.cols()), test(n, x.cols());
  std::vector<int> train_label(n_train), test_label(n_train);
  for (size_t i = 0; i < n_train; ++i) {
    train.row(static_cast<Eigen::Index>(i)) = pooled.row(perm[i]);
    train_label[i] = label[static_cast<size_t>(perm[i])];
    test.row(static_cast<Eigen::Index>(i)) = pooled.row(perm[n_train + i]);
    test_label[i] = label[static_cast<size_t>(perm[n_train + i])];
  }
  std::vector<int> correct(n_train, 0);
  parallel_for(n_train, [&](size_t i) {
    auto ii = static_cast<Eigen::Index>(i);
    Vector d = (train.rowwise() - test.row(ii)).rowwise().squaredNorm();
    double best = std::numeric_limits<double>::infinity();
    int pred = 0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d(j) > 0.0 && d(j) < best) {
        best = d(j);
        pred = train_label[static_cast<size_t>(j)];
      }
    }
    correct[i] = pred == test_label[i];
  });
  return std::accumulate(correct.begin(), correct.end(), 0.0) / static_cast<double>(n_train);
}

} // namespace metrics
} // namespace vinegen
