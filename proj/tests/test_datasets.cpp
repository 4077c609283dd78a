#include <vinegen/csv.hpp>
#include <vinegen/datasets.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace vinegen;

namespace {

double
nearest_center_distance(double x, double y, const std::vector<std::array<double, 2>>& centers)
{
  double best = 1e300;
  for (const auto& c : centers)
    best = std::min(best, std::hypot(x - c[0], y - c[1]));
  return best;
}

std::string
temp_path(const std::string& name)
{
  return (std::filesystem::temp_directory_path() / ("vinegen_" + name)).string();
}

} // namespace

TEST(Ring8, PointsStayNearTheirCenters)
{
  auto ds = datasets::ring8(8000, 1);
  auto centers = datasets::ring8_centers();
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i)
    ASSERT_LT(nearest_center_distance(ds.x(i, 0), ds.x(i, 1), centers), 0.2);
}

TEST(Ring8, ModeCountsAreBalanced)
{
  auto ds = datasets::ring8(8000, 2);
  std::vector<int> counts(8, 0);
  for (int l : *ds.labels)
    ++counts[static_cast<size_t>(l)];
  for (int c : counts) {
    EXPECT_GE(c, 800);
    EXPECT_LE(c, 1200);
  }
}

TEST(Ring8, SeedDeterminism)
{
  auto a = datasets::ring8(500, 3);
  auto b = datasets::ring8(500, 3);
  auto c = datasets::ring8(500, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
  EXPECT_THROW(datasets::ring8(7, 0), DegenerateInputError);
}

TEST(Grid25, CentersAndCounts)
{
  const size_t n = 10000;
  auto ds = datasets::grid25(n, 5);
  auto centers = datasets::grid25_centers();
  ASSERT_EQ(centers.size(), 25u);
  std::vector<int> counts(25, 0);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    ASSERT_LT(nearest_center_distance(ds.x(i, 0), ds.x(i, 1), centers), 0.5);
    ++counts[static_cast<size_t>((*ds.labels)[static_cast<size_t>(i)])];
  }
  // binomial(n, 1/25): 5 standard deviations
  const double mean = n / 25.0, sd = std::sqrt(n * (1.0 / 25) * (24.0 / 25));
  for (int c : counts)
    EXPECT_LT(std::abs(c - mean), 5 * sd);
  EXPECT_EQ(datasets::grid25(300, 9).x, datasets::grid25(300, 9).x);
}

TEST(SwissRoll, RadiusFollowsAngle)
{
  auto ds = datasets::swiss_roll(5000, 6);
  size_t ok = 0;
  double min_turn = 1e300, max_turn = -1e300;
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    double r = std::hypot(ds.x(i, 0), ds.x(i, 1));
    // unwrap the angle using the radius (t = 10 r)
    double t = 10.0 * r;
    double a = std::atan2(ds.x(i, 1), ds.x(i, 0));
    double turns = std::round((t - a) / (2 * std::numbers::pi));
    double unwrapped = a + 2 * std::numbers::pi * turns;
    if (std::abs(r - 0.1 * unwrapped) < 0.05)
      ++ok;
    min_turn = std::min(min_turn, unwrapped);
    max_turn = std::max(max_turn, unwrapped);
  }
  EXPECT_GE(ok, 0.99 * 5000);
  // t spans [1.5 pi, 4.5 pi], i.e. 1.5 turns
  EXPECT_GE((max_turn - min_turn) / (2 * std::numbers::pi), 1.5 * 0.99);
  EXPECT_EQ(datasets::swiss_roll(100, 1).x, datasets::swiss_roll(100, 1).x);
}

TEST(Cone3d, Construction)
{
  auto ds = datasets::cone3d(5000, 7);
  ASSERT_EQ(ds.dim(), 3u);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    ASSERT_LE(std::abs(ds.x(i, 2) - std::hypot(ds.x(i, 0), ds.x(i, 1))), 0.1 + 1e-12);
    ASSERT_LE(std::abs(ds.x(i, 0)), 5.0);
  }
  double tau = stats::kendall_tau(stats::column(ds.x, 0), stats::column(ds.x, 1));
  EXPECT_LT(std::abs(tau), 0.04);
  EXPECT_EQ(datasets::cone3d(50, 7).x, datasets::cone3d(50, 7).x);
  EXPECT_THROW(datasets::cone3d(0, 7), DegenerateInputError);
}

TEST(Digits, ShapeRangeAndLabels)
{
  auto ds = datasets::digits(300, 11);
  ASSERT_EQ(ds.dim(), 64u);
  ASSERT_TRUE(ds.labels.has_value());
  EXPECT_GE(ds.x.minCoeff(), 0.0);
  EXPECT_LE(ds.x.maxCoeff(), 1.0);
  std::vector<int> counts(10, 0);
  for (int l : *ds.labels) {
    ASSERT_GE(l, 0);
    ASSERT_LT(l, 10);
    ++counts[static_cast<size_t>(l)];
  }
  for (int c : counts)
    EXPECT_GT(c, 10);
  // every image has some ink, none is saturated everywhere
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    EXPECT_GT(ds.x.row(i).sum(), 2.0);
    EXPECT_LT(ds.x.row(i).mean(), 0.6);
  }
  EXPECT_EQ(datasets::digits(20, 3).x, datasets::digits(20, 3).x);
}

TEST(Digits, ClassMeansDiffer)
{
  auto ds = datasets::digits(1000, 12);
  std::vector<Vector> means;
  for (int c = 0; c < 10; ++c)
    means.push_back(ds.subset(c).x.colwise().mean().transpose());
  for (int a = 0; a < 10; ++a)
    for (int b = a + 1; b < 10; ++b)
      EXPECT_GT((means[a] - means[b]).norm(), 0.5) << a << " vs " << b;
}

TEST(Downsample, Arithmetic)
{
  Dataset ds;
  ds.x = Matrix::Random(3, 28 * 28).cwiseAbs();
  ds.image_shape = std::pair<size_t, size_t>{ 28, 28 };
  auto d2 = datasets::downsample(ds, 2);
  EXPECT_EQ(d2.image_shape->first, 14u);
  EXPECT_EQ(d2.dim(), 196u);
  auto d4 = datasets::downsample(ds, 4);
  EXPECT_EQ(d4.dim(), 49u);
  double block = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      block += ds.x(1, r * 28 + c);
  EXPECT_NEAR(d4.x(1, 0), block / 16.0, 1e-14);
  // 30 x 30 with factor 4 crops one pixel on each side
  Dataset odd;
  odd.x = Matrix::Zero(1, 900);
  odd.x(0, 1 * 30 + 1) = 16.0;
  odd.image_shape = std::pair<size_t, size_t>{ 30, 30 };
  auto o4 = datasets::downsample(odd, 4);
  EXPECT_EQ(o4.dim(), 49u);
  EXPECT_EQ(o4.x(0, 0), 1.0);
}

TEST(Idx, RoundTripAndZeroImage)
{
  Dataset ds;
  ds.x = Matrix::Zero(3, 16);
  for (int j = 0; j < 16; ++j) {
    ds.x(1, j) = j / 255.0;
    ds.x(2, j) = (255 - 3 * j) / 255.0;
  }
  ds.labels = std::vector<int>{ 0, 7, 9 };
  ds.image_shape = std::pair<size_t, size_t>{ 4, 4 };
  auto img = temp_path("img.idx"), lab = temp_path("lab.idx");
  datasets::write_idx(ds, img, lab);
  auto back = datasets::load_idx(img, lab);
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(*back.labels, *ds.labels);
  EXPECT_EQ(back.image_shape, ds.image_shape);
  EXPECT_TRUE((back.x.row(0).array() == 0.0).all());
  std::remove(img.c_str());
  std::remove(lab.c_str());
}

TEST(Idx, BadMagicReportsOffset)
{
  auto path = temp_path("bad.idx");
  {
    std::ofstream out(path, std::ios::binary);
    const char bytes[] = { 0, 0, 8, 1, 0, 0, 0, 0 };
    out.write(bytes, sizeof(bytes));
  }
  try {
    datasets::load_idx(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos);
  }
  {
    std::ofstream out(path, std::ios::binary);
    const char bytes[] = { 0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4, 5 };
    out.write(bytes, sizeof(bytes));
  }
  try {
    datasets::load_idx(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 20"), std::string::npos) << e.what();
  }
  std::remove(path.c_str());
}

TEST(Csv, ReloadsBitIdentically)
{
  for (auto ds : { datasets::ring8(200, 1), datasets::swiss_roll(200, 2), datasets::cone3d(200, 3) }) {
    auto text = csv::to_string(ds);
    auto back = csv::parse(text);
    EXPECT_EQ(back.x, ds.x);
    EXPECT_EQ(back.labels.has_value(), ds.labels.has_value());
    if (ds.labels) {
      EXPECT_EQ(*back.labels, *ds.labels);
    }
    // same bytes when written again
    EXPECT_EQ(csv::to_string(back), text);
  }
}

TEST(Csv, HeaderAndErrors)
{
  Dataset empty;
  empty.x.resize(0, 3);
  EXPECT_EQ(csv::to_string(empty), "x1,x2,x3\n");
  auto back = csv::parse("x1,x2,x3\n");
  EXPECT_EQ(back.x.rows(), 0);
  EXPECT_EQ(back.x.cols(), 3);
  EXPECT_THROW(csv::parse(""), FormatError);
  EXPECT_THROW(csv::parse("a,b\n1,2\n3\n"), FormatError);
  EXPECT_THROW(csv::parse("a,b\n1,zz\n"), FormatError);
  EXPECT_THROW(csv::parse("a,label\n1,-2\n"), FormatError);
}

TEST(Fnv1a, KnownValues)
{
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}
