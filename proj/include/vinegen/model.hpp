#pragma once

#include "marginals.hpp"
#include "parallel.hpp"
#include "vine.hpp"

#include <cmath>
#include <vector>

namespace vinegen {

//! Joint distribution on the natural scale: kernel marginals for every
//! column coupled by a vine copula (Sklar's theorem).
class VineDistribution
{
public:
  //! marginal densities are floored here before taking logs
  static constexpr double min_density = 1e-300;

  VineDistribution() = default;

  VineDistribution(std::vector<KernelMarginal> marginals, VineModel vine)
    : marginals_(std::move(marginals))
    , vine_(std::move(vine))
  {
    if (marginals_.size() != vine_.dim())
      throw DimensionError("VineDistribution: " + std::to_string(marginals_.size()) +
                           " marginals for a " + std::to_string(vine_.dim()) + "-dimensional vine");
  }

  //! fits one marginal per column, then a vine on the pseudo-observations.
  static VineDistribution fit(const Matrix& x, Family family, size_t trunc_level)
  {
    if (x.cols() < 2)
      throw DimensionError("fit: need at least 2 columns, got " + std::to_string(x.cols()));
    std::vector<KernelMarginal> margins(static_cast<size_t>(x.cols()));
    parallel_for(margins.size(), [&](size_t j) {
      margins[j] = KernelMarginal::fit(stats::column(x, static_cast<Eigen::Index>(j)));
    });
    Matrix u = pit(margins, x);
    return { std::move(margins), VineModel::fit(u, family, trunc_level) };
  }

  size_t dim() const { return marginals_.size(); }
  const std::vector<KernelMarginal>& marginals() const { return marginals_; }
  const VineModel& vine() const { return vine_; }

  Matrix pit(const Matrix& x) const { return pit(marginals_, x); }

  Matrix inverse_pit(const Matrix& u) const
  {
    check_cols(u);
    Matrix x(u.rows(), u.cols());
    parallel_for(static_cast<size_t>(u.rows()), [&](size_t i) {
      for (Eigen::Index j = 0; j < u.cols(); ++j)
        x(static_cast<Eigen::Index>(i), j) =
          marginals_[static_cast<size_t>(j)].quantile(u(static_cast<Eigen::Index>(i), j));
    });
    return x;
  }

  //! log density on the natural scale: log c(F(x)) + sum_j log f_j(x_j).
  Vector log_density(const Matrix& x) const
  {
    check_cols(x);
    Vector out = vine_.log_density(pit(x));
    parallel_for(static_cast<size_t>(x.rows()), [&](size_t i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        out(static_cast<Eigen::Index>(i)) += std::log(std::max(
          marginals_[static_cast<size_t>(j)].pdf(x(static_cast<Eigen::Index>(i), j)), min_density));
    });
    return out;
  }

  //! n draws on the natural scale.
  Matrix sample(size_t n, uint64_t seed) const { return inverse_pit(vine_.sample(n, seed)); }

private:
  void check_cols(const Matrix& x) const
  {
    if (static_cast<size_t>(x.cols()) != dim())
      throw DimensionError("expected " + std::to_string(dim()) + " columns, got " +
                           std::to_string(x.cols()));
  }

  static Matrix pit(const std::vector<KernelMarginal>& margins, const Matrix& x)
  {
    if (static_cast<size_t>(x.cols()) != margins.size())
      throw DimensionError("expected " + std::to_string(margins.size()) + " columns, got " +
                           std::to_string(x.cols()));
    Matrix u(x.rows(), x.cols());
    parallel_for(static_cast<size_t>(x.rows()), [&](size_t i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        u(static_cast<Eigen::Index>(i), j) =
          clamp_unit(margins[static_cast<size_t>(j)].cdf(x(static_cast<Eigen::Index>(i), j)));
    });
    return u;
  }

  std::vector<KernelMarginal> marginals_;
  VineModel vine_;
};

} // namespace vinegen
