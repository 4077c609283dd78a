#include <vinegen/bicop.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace vinegen;

namespace {

std::vector<double>
col(const Matrix& m, int j)
{
  return stats::column(m, j);
}

// fitted models of all three families on Gaussian(0.7) data
std::vector<BivariateCopula>
fitted_models()
{
  Matrix u = BivariateCopula::gaussian(0.7).simulate(1000, 21);
  std::vector<BivariateCopula> models;
  for (Family f : { Family::independence, Family::gaussian, Family::tll })
    models.push_back(BivariateCopula::fit(col(u, 0), col(u, 1), f));
  // a nonmonotone dependence: v concentrated near |2u - 1|
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> a(1000), b(1000);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = clamp_unit(unif(rng));
    b[i] = clamp_unit(std::clamp(std::abs(2 * a[i] - 1) + noise(rng), 0.001, 0.999));
  }
  models.push_back(BivariateCopula::fit(a, b, Family::tll));
  return models;
}

} // namespace

TEST(BicopFit, GaussianRecoversRho)
{
  for (double rho : { -0.5, 0.0, 0.7 }) {
    Matrix u = BivariateCopula::gaussian(rho).simulate(5000, 31);
    auto c = BivariateCopula::fit(col(u, 0), col(u, 1), Family::gaussian);
    EXPECT_NEAR(c.rho(), rho, 0.05) << "rho=" << rho;
  }
  Matrix u = BivariateCopula::gaussian(0.7).simulate(5000, 32);
  double r = BivariateCopula::fit(col(u, 0), col(u, 1), Family::gaussian).rho();
  EXPECT_GE(r, 0.65);
  EXPECT_LE(r, 0.75);
}

TEST(BicopFit, IndependentDataGivesSmallRho)
{
  Matrix u = BivariateCopula::independence().simulate(5000, 33);
  double r = BivariateCopula::fit(col(u, 0), col(u, 1), Family::gaussian).rho();
  EXPECT_GE(r, -0.06);
  EXPECT_LE(r, 0.06);
}

TEST(BicopFit, TauInversionAtHalf)
{
  // permutation of 33 ranks with exactly 132 inversions: tau = 1 - 4 * 132 / (33 * 32) = 0.5
  const size_t n = 33;
  std::vector<double> x(n), y(n);
  for (size_t i = 0; i < n; ++i)
    x[i] = y[i] = static_cast<double>(i + 1);
  size_t inversions = 0;
  for (size_t pass = 0; inversions < 132; ++pass)
    for (size_t i = 0; i + 1 < n - pass && inversions < 132; ++i)
      if (y[i] < y[i + 1]) {
        std::swap(y[i], y[i + 1]);
        ++inversions;
      }
  for (size_t i = 0; i < n; ++i) {
    x[i] /= (n + 1.0);
    y[i] /= (n + 1.0);
  }
  ASSERT_DOUBLE_EQ(stats::kendall_tau(x, y), 0.5);
  auto c = BivariateCopula::fit(x, y, Family::gaussian);
  EXPECT_NEAR(c.rho(), 0.7071067811865475, 1e-14);
}

TEST(BicopFit, PerfectlyMonotoneDataClampsWithWarning)
{
  std::vector<double> x(50);
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = (i + 1.0) / 51.0;
  auto c = BivariateCopula::fit(x, x, Family::gaussian);
  EXPECT_DOUBLE_EQ(c.rho(), 0.99);
  EXPECT_FALSE(c.warning().empty());
}

TEST(BicopFit, Errors)
{
  std::vector<double> small(29, 0.5), ok(40, 0.3), bad(40, 0.3);
  bad[5] = 1.0;
  EXPECT_THROW(BivariateCopula::fit(small, small, Family::tll), DegenerateInputError);
  EXPECT_THROW(BivariateCopula::fit(ok, bad, Family::gaussian), DomainError);
  EXPECT_THROW(BivariateCopula::gaussian(1.0), DomainError);
}

TEST(BicopPdf, ClosedForms)
{
  EXPECT_EQ(BivariateCopula::independence().pdf(0.3, 0.8), 1.0);
  auto g0 = BivariateCopula::gaussian(0.0);
  for (double u : { 0.1, 0.5, 0.93 })
    for (double v : { 0.02, 0.6 })
      EXPECT_NEAR(g0.pdf(u, v), 1.0, 1e-15);
  EXPECT_NEAR(BivariateCopula::gaussian(0.5).pdf(0.5, 0.5), 1.1547005383792517, 1e-12);
  EXPECT_THROW(g0.pdf(0.0, 0.5), DomainError);
  EXPECT_THROW(g0.pdf(0.5, 1.0), DomainError);
}

TEST(BicopHfunc, ClosedForms)
{
  auto indep = BivariateCopula::independence();
  for (double u2 : { 0.1, 0.7 })
    EXPECT_EQ(indep.hfunc(0.35, u2, 2), 0.35);
  for (double rho : { -0.8, 0.3, 0.95 })
    EXPECT_NEAR(BivariateCopula::gaussian(rho).hfunc(0.5, 0.5, 2), 0.5, 1e-15);
  auto g = BivariateCopula::gaussian(0.5);
  // Phi(Phi^-1(0.975) / sqrt(0.75)), evaluated with scipy
  EXPECT_NEAR(g.hfunc(0.975, 0.5, 2), 0.9881874393411993, 1e-10);
  EXPECT_THROW(g.hfunc(0.5, 0.5, 3), DomainError);
}

TEST(BicopHinv, ClosedForms)
{
  EXPECT_EQ(BivariateCopula::independence().hinv(0.42, 0.9, 2), 0.42);
  EXPECT_NEAR(BivariateCopula::gaussian(0.5).hinv(0.98820, 0.5, 2), 0.975, 1e-4);
}

TEST(BicopHinv, RoundTripOnGrid)
{
  for (const auto& c : fitted_models()) {
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        double u1 = (i + 0.5) / 20, u2 = (j + 0.5) / 20;
        EXPECT_NEAR(c.hinv(c.hfunc(u1, u2, 2), u2, 2), u1, 1e-6) << to_string(c.family());
        EXPECT_NEAR(c.hinv(c.hfunc(u2, u1, 1), u2, 1), u1, 1e-6) << to_string(c.family());
      }
    }
  }
}

TEST(BicopHfunc, MonotoneInConditionedArgument)
{
  for (const auto& c : fitted_models()) {
    for (double cond : { 0.001, 0.2, 0.5, 0.77, 0.999 }) {
      double prev2 = 0.0, prev1 = 0.0;
      for (int i = 0; i < 50; ++i) {
        double u = (i + 0.5) / 50;
        double h2 = c.hfunc(u, cond, 2), h1 = c.hfunc(cond, u, 1);
        EXPECT_GE(h2, prev2);
        EXPECT_GE(h1, prev1);
        EXPECT_GE(h2, 0.0);
        EXPECT_LE(h2, 1.0);
        prev2 = h2;
        prev1 = h1;
      }
    }
  }
}

TEST(BicopTll, GridInvariants)
{
  auto c = fitted_models()[2];
  const auto& g = c.grid();
  ASSERT_EQ(g.size(), 30u);
  for (size_t i = 0; i < g.size(); ++i)
    EXPECT_NEAR(g.nodes[i] + g.nodes[g.size() - 1 - i], 1.0, 1e-12);
  for (double v : g.values)
    EXPECT_GE(v, 0.0);
  // integral of the bilinear interpolant by a fine midpoint rule
  double integral = 0.0;
  const int k = 400;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      integral += c.pdf((i + 0.5) / k, (j + 0.5) / k);
  integral /= k * k;
  EXPECT_GE(integral, 0.95);
  EXPECT_LE(integral, 1.05);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j)
      EXPECT_GE(c.pdf((i + 0.5) / 100, (j + 0.5) / 100), 0.0);
}

TEST(BicopTll, SymmetricUnderSwappedData)
{
  Matrix u = BivariateCopula::gaussian(-0.4).simulate(600, 41);
  std::vector<double> a = col(u, 0), b = col(u, 1);
  std::vector<double> x = a, y = b;
  x.insert(x.end(), b.begin(), b.end());
  y.insert(y.end(), a.begin(), a.end());
  auto c = BivariateCopula::fit(x, y, Family::tll);
  for (double p : { 0.01, 0.2, 0.43, 0.8, 0.999 })
    for (double q : { 0.05, 0.5, 0.71 })
      EXPECT_NEAR(c.pdf(p, q), c.pdf(q, p), 1e-8);
}

TEST(BicopTll, CapturesDependence)
{
  Matrix u = BivariateCopula::gaussian(0.7).simulate(2000, 42);
  auto c = BivariateCopula::fit(col(u, 0), col(u, 1), Family::tll);
  // the kernel estimate has positive dependence and beats independence
  EXPECT_GT(c.pdf(0.9, 0.9), 1.5);
  EXPECT_LT(c.pdf(0.9, 0.1), 0.5);
  EXPECT_GT(c.loglik(col(u, 0), col(u, 1)) / 2000, 0.2);
}

TEST(BicopSimulate, KendallTauAndMargins)
{
  Matrix ui = BivariateCopula::independence().simulate(10000, 51);
  EXPECT_NEAR(stats::kendall_tau(col(ui, 0), col(ui, 1)), 0.0, 0.03);
  Matrix ug = BivariateCopula::gaussian(0.7).simulate(10000, 52);
  double tau = stats::kendall_tau(col(ug, 0), col(ug, 1));
  EXPECT_GE(tau, 0.46);
  EXPECT_LE(tau, 0.52);
  for (const auto& c : fitted_models()) {
    Matrix u = c.simulate(5000, 53);
    EXPECT_GT(stats::ks_uniform(col(u, 0)).p_value, 0.01) << to_string(c.family());
    EXPECT_GT(stats::ks_uniform(col(u, 1)).p_value, 0.01) << to_string(c.family());
  }
}

TEST(BicopSimulate, SeedDeterminism)
{
  auto c = fitted_models()[2];
  EXPECT_EQ(c.simulate(100, 7), c.simulate(100, 7));
  EXPECT_NE(c.simulate(100, 7), c.simulate(100, 8));
}

TEST(BicopLoglik, Values)
{
  Matrix u = BivariateCopula::independence().simulate(2000, 61);
  EXPECT_EQ(BivariateCopula::independence().loglik(col(u, 0), col(u, 1)), 0.0);
  auto g = BivariateCopula::gaussian(0.9);
  // expected value -log(1 - 0.81) / 2 = 0.8304; Monte Carlo sd of the mean
  // at n = 2000 is 0.020, band = 4 sd
  Matrix s = g.simulate(2000, 62);
  double ll = g.loglik(col(s, 0), col(s, 1)) / 2000;
  EXPECT_NEAR(ll, 0.8304, 0.08);
  EXPECT_LT(g.loglik(col(u, 0), col(u, 1)) / 2000, 0.0);
  std::vector<double> bad{ 0.5, 1.2 };
  EXPECT_THROW(g.loglik(bad, bad), DomainError);
}
