#pragma once

#include "error.hpp"
#include "stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vinegen {

//! Tabular data set; rows are observations.
struct Dataset
{
  Matrix x;
  std::optional<std::vector<int>> labels;
  //! generator name, seed and parameters, or the source file
  std::string provenance;
  //! (rows, cols) when each row is a flattened grayscale image
  std::optional<std::pair<size_t, size_t>> image_shape;

  size_t size() const { return static_cast<size_t>(x.rows()); }
  size_t dim() const { return static_cast<size_t>(x.cols()); }

  //! rows with the given label.
  Dataset subset(int label) const
  {
    if (!labels)
      throw FormatError("dataset has no labels");
    std::vector<Eigen::Index> rows;
    for (size_t i = 0; i < labels->size(); ++i)
      if ((*labels)[i] == label)
        rows.push_back(static_cast<Eigen::Index>(i));
    return select(rows);
  }

  //! rows [begin, end).
  Dataset slice(size_t begin, size_t end) const
  {
    std::vector<Eigen::Index> rows;
    for (size_t i = begin; i < end; ++i)
      rows.push_back(static_cast<Eigen::Index>(i));
    return select(rows);
  }

  Dataset select(const std::vector<Eigen::Index>& rows) const
  {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (size_t i = 0; i < rows.size(); ++i)
      out.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    if (labels) {
      out.labels.emplace();
      for (auto r : rows)
        out.labels->push_back((*labels)[static_cast<size_t>(r)]);
    }
    out.provenance = provenance;
    out.image_shape = image_shape;
    return out;
  }
};

namespace datasets {

namespace detail {

inline std::string
describe(const std::string& name, size_t n, uint64_t seed, const std::string& params = "")
{
  return name + "(n=" + std::to_string(n) + ", seed=" + std::to_string(seed) +
         (params.empty() ? "" : ", " + params) + ")";
}

inline Dataset
gaussian_mixture(const std::vector<std::array<double, 2>>& centers,
                 double sd,
                 size_t n,
                 uint64_t seed,
                 std::string provenance)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, centers.size() - 1);
  std::normal_distribution<double> noise(0.0, sd);
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), 2);
  ds.labels.emplace(n);
  for (size_t i = 0; i < n; ++i) {
    size_t c = pick(rng);
    const auto ii = static_cast<Eigen::Index>(i);
    ds.x(ii, 0) = centers[c][0] + noise(rng);
    ds.x(ii, 1) = centers[c][1] + noise(rng);
    (*ds.labels)[i] = static_cast<int>(c);
  }
  ds.provenance = std::move(provenance);
  return ds;
}

} // namespace detail

//! centers of the ring of eight Gaussians
inline std::vector<std::array<double, 2>>
ring8_centers(double radius = 2.0)
{
  std::vector<std::array<double, 2>> c(8);
  for (size_t k = 0; k < 8; ++k) {
    double a = 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0;
    c[k] = { radius * std::cos(a), radius * std::sin(a) };
  }
  return c;
}

//! centers of the 5 x 5 grid of Gaussians
inline std::vector<std::array<double, 2>>
grid25_centers(double scale = 1.0)
{
  std::vector<std::array<double, 2>> c;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      c.push_back({ scale * a, scale * b });
  return c;
}

//! Eight isotropic Gaussians on a circle; labels hold the mode index.
inline Dataset
ring8(size_t n, uint64_t seed, double radius = 2.0, double sd = 0.02)
{
  if (n < 8)
    throw DegenerateInputError("ring8: n must be at least 8");
  return detail::gaussian_mixture(ring8_centers(radius), sd, n, seed,
                                  detail::describe("ring8", n, seed,
                                                   "radius=" + std::to_string(radius) +
                                                     ", sd=" + std::to_string(sd)));
}

//! 25 isotropic Gaussians on the integer grid {-2..2}^2 times `scale`.
inline Dataset
grid25(size_t n, uint64_t seed, double scale = 1.0, double sd = 0.05)
{
  if (n < 25)
    throw DegenerateInputError("grid25: n must be at least 25");
  return detail::gaussian_mixture(grid25_centers(scale), sd, n, seed,
                                  detail::describe("grid25", n, seed,
                                                   "scale=" + std::to_string(scale) +
                                                     ", sd=" + std::to_string(sd)));
}

//! 2-d swiss roll: 0.1 (t cos t, t sin t) + noise, t ~ U[1.5 pi, 4.5 pi].
inline Dataset
swiss_roll(size_t n, uint64_t seed, double noise_sd = 0.01)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tdist(1.5 * std::numbers::pi, 4.5 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, noise_sd);
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    double t = tdist(rng);
    ds.x(i, 0) = 0.1 * t * std::cos(t) + noise(rng);
    ds.x(i, 1) = 0.1 * t * std::sin(t) + noise(rng);
  }
  ds.provenance = detail::describe("swissroll", n, seed, "noise=" + std::to_string(noise_sd));
  return ds;
}

//! X1, X2 ~ U[-5, 5], X3 = sqrt(X1^2 + X2^2) + U[-0.1, 0.1].
inline Dataset
cone3d(size_t n, uint64_t seed)
{
  if (n < 1)
    throw DegenerateInputError("cone3d: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> side(-5.0, 5.0), jitter(-0.1, 0.1);
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    double a = side(rng);
    double b = side(rng);
    ds.x(i, 0) = a;
    ds.x(i, 1) = b;
    ds.x(i, 2) = std::sqrt(a * a + b * b) + jitter(rng);
  }
  ds.provenance = detail::describe("cone3d", n, seed);
  return ds;
}

namespace detail {

using Stroke = std::vector<std::array<double, 2>>;

inline Stroke
arc(double cx, double cy, double rx, double ry, double from_deg, double to_deg, int steps = 16)
{
  Stroke s;
  for (int k = 0; k <= steps; ++k) {
    double a = (from_deg + (to_deg - from_deg) * k / steps) * std::numbers::pi / 180.0;
    s.push_back({ cx + rx * std::cos(a), cy - ry * std::sin(a) });
  }
  return s;
}

inline Stroke
join(Stroke a, const Stroke& b)
{
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// strokes of the ten digit glyphs in the unit box, y pointing down
inline std::vector<Stroke>
glyph(int digit)
{
  switch (digit) {
    case 0:
      return { arc(0.5, 0.5, 0.28, 0.4, 0, 360, 24) };
    case 1:
      return { { { 0.33, 0.28 }, { 0.52, 0.1 }, { 0.52, 0.9 } } };
    case 2:
      return { join(arc(0.5, 0.32, 0.27, 0.22, 160, -20), Stroke{ { 0.22, 0.9 }, { 0.8, 0.9 } }) };
    case 3:
      return { join(arc(0.48, 0.3, 0.24, 0.2, 150, -90), arc(0.48, 0.7, 0.27, 0.2, 90, -150)) };
    case 4:
      return { { { 0.64, 0.9 }, { 0.64, 0.1 }, { 0.2, 0.64 }, { 0.82, 0.64 } } };
    case 5:
      return { join(Stroke{ { 0.76, 0.1 }, { 0.32, 0.1 }, { 0.29, 0.46 } },
                    arc(0.48, 0.66, 0.27, 0.24, 135, -150)) };
    case 6:
      return { join(Stroke{ { 0.7, 0.1 }, { 0.45, 0.25 }, { 0.28, 0.5 } },
                    arc(0.5, 0.68, 0.22, 0.22, 180, -180, 20)) };
    case 7:
      return { { { 0.2, 0.1 }, { 0.8, 0.1 }, { 0.42, 0.9 } } };
    case 8:
      return { arc(0.5, 0.29, 0.19, 0.19, 0, 360, 20), arc(0.5, 0.7, 0.24, 0.21, 0, 360, 20) };
    default:
      return { join(arc(0.48, 0.33, 0.22, 0.22, 0, 360, 20), Stroke{ { 0.7, 0.33 }, { 0.62, 0.9 } }) };
  }
}

inline double
segment_distance(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b)
{
  double dx = b[0] - a[0], dy = b[1] - a[1];
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? std::clamp(((px - a[0]) * dx + (py - a[1]) * dy) / len2, 0.0, 1.0) : 0.0;
  double ex = a[0] + t * dx - px, ey = a[1] + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

} // namespace detail

//! Procedurally drawn handwritten-style digits: each image is one of ten
//! stroke glyphs under a random affine distortion (rotation, scale, shear,
//! shift), random stroke width and vertex jitter, rendered anti-aliased on
//! a (side * supersample)^2 canvas and block-averaged to side x side.
//! Pixels lie in [0,1]; labels hold the digit.
inline Dataset
digits(size_t n, uint64_t seed, size_t side = 8, size_t supersample = 4)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.015);
  const size_t canvas = side * supersample;
  Dataset ds;
  ds.x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(side * side));
  ds.labels.emplace(n);
  ds.image_shape = std::pair{ side, side };
  for (size_t i = 0; i < n; ++i) {
    int digit = pick(rng);
    (*ds.labels)[i] = digit;
    double angle = (unif(rng) - 0.5) * 0.4;
    double sx = 0.8 + 0.25 * unif(rng), sy = 0.85 + 0.2 * unif(rng);
    double shear = (unif(rng) - 0.5) * 0.4;
    double tx = (unif(rng) - 0.5) * 0.12, ty = (unif(rng) - 0.5) * 0.12;
    double width = 0.06 + 0.06 * unif(rng);
    // distorted strokes in the unit box; the glyph occupies the central 75%
    std::vector<detail::Stroke> strokes = detail::glyph(digit);
    for (auto& s : strokes) {
      for (auto& p : s) {
        double x = (p[0] - 0.5) * sx + shear * (p[1] - 0.5) + jitter(rng);
        double y = (p[1] - 0.5) * sy + jitter(rng);
        double xr = std::cos(angle) * x - std::sin(angle) * y;
        double yr = std::sin(angle) * x + std::cos(angle) * y;
        p = { 0.5 + 0.75 * xr + tx, 0.5 + 0.75 * yr + ty };
      }
    }
    const double edge = 1.0 / static_cast<double>(canvas);
    for (size_t r = 0; r < canvas; ++r) {
      for (size_t c = 0; c < canvas; ++c) {
        double px = (c + 0.5) / canvas, py = (r + 0.5) / canvas;
        double dist = 1e9;
        for (const auto& s : strokes)
          for (size_t k = 0; k + 1 < s.size(); ++k)
            dist = std::min(dist, detail::segment_distance(px, py, s[k], s[k + 1]));
        double ink = std::clamp((0.5 * width * 0.75 - dist) / edge + 0.5, 0.0, 1.0);
        size_t pix = (r / supersample) * side + c / supersample;
        ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pix)) += ink;
      }
    }
  }
  ds.x /= static_cast<double>(supersample * supersample);
  ds.provenance = detail::describe("digits", n, seed, "side=" + std::to_string(side));
  return ds;
}

//! f x f block averaging of square images; the image is center-cropped to
//! the largest multiple of f first.
inline Dataset
downsample(const Dataset& ds, size_t factor)
{
  if (!ds.image_shape)
    throw FormatError("downsample: dataset has no image shape");
  if (factor < 1)
    throw DomainError("downsample: factor must be positive");
  auto [rows, cols] = *ds.image_shape;
  size_t out_r = rows / factor, out_c = cols / factor;
  size_t off_r = (rows - out_r * factor) / 2, off_c = (cols - out_c * factor) / 2;
  Dataset out;
  out.x = Matrix::Zero(ds.x.rows(), static_cast<Eigen::Index>(out_r * out_c));
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i)
    for (size_t r = 0; r < out_r * factor; ++r)
      for (size_t c = 0; c < out_c * factor; ++c)
        out.x(i, static_cast<Eigen::Index>((r / factor) * out_c + c / factor)) +=
          ds.x(i, static_cast<Eigen::Index>((r + off_r) * cols + c + off_c));
  out.x /= static_cast<double>(factor * factor);
  out.labels = ds.labels;
  out.image_shape = std::pair{ out_r, out_c };
  out.provenance = ds.provenance + " | downsample(" + std::to_string(factor) + ")";
  return out;
}

namespace detail {

inline uint32_t
read_be32(std::istream& in, const std::string& path, std::streamoff offset)
{
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(path + ": truncated header at offset " + std::to_string(offset));
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

inline void
write_be32(std::ostream& out, uint32_t v)
{
  char b[4] = { char(v >> 24), char(v >> 16), char(v >> 8), char(v) };
  out.write(b, 4);
}

} // namespace detail

inline constexpr uint32_t idx_images_magic = 0x00000803;
inline constexpr uint32_t idx_labels_magic = 0x00000801;

//! reads an IDX image file (and optionally a label file); pixels are scaled
//! to [0,1].
inline Dataset
load_idx(const std::string& images_path, const std::string& labels_path = "")
{
  std::ifstream in(images_path, std::ios::binary);
  if (!in)
    throw FormatError(images_path + ": cannot open");
  uint32_t magic = detail::read_be32(in, images_path, 0);
  if (magic != idx_images_magic)
    throw FormatError(images_path + ": bad magic number at offset 0 (expected 0x00000803)");
  uint32_t n = detail::read_be32(in, images_path, 4);
  uint32_t rows = detail::read_be32(in, images_path, 8);
  uint32_t cols = detail::read_be32(in, images_path, 12);
  Dataset ds;
  ds.x.resize(n, static_cast<Eigen::Index>(rows) * cols);
  std::vector<unsigned char> buf(static_cast<size_t>(rows) * cols);
  for (uint32_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
      throw FormatError(images_path + ": truncated image data at offset " +
                        std::to_string(16 + static_cast<size_t>(i) * buf.size()));
    for (size_t p = 0; p < buf.size(); ++p)
      ds.x(i, static_cast<Eigen::Index>(p)) = buf[p] / 255.0;
  }
  ds.image_shape = std::pair<size_t, size_t>{ rows, cols };
  ds.provenance = "idx:" + images_path;
  if (!labels_path.empty()) {
    std::ifstream lin(labels_path, std::ios::binary);
    if (!lin)
      throw FormatError(labels_path + ": cannot open");
    if (detail::read_be32(lin, labels_path, 0) != idx_labels_magic)
      throw FormatError(labels_path + ": bad magic number at offset 0 (expected 0x00000801)");
    uint32_t nl = detail::read_be32(lin, labels_path, 4);
    if (nl != n)
      throw FormatError(labels_path + ": label count " + std::to_string(nl) +
                        " does not match image count " + std::to_string(n) + " at offset 4");
    std::vector<unsigned char> lb(n);
    if (!lin.read(reinterpret_cast<char*>(lb.data()), n))
      throw FormatError(labels_path + ": truncated label data at offset 8");
    ds.labels.emplace(lb.begin(), lb.end());
  }
  return ds;
}

//! writes images (pixels in [0,1], rounded to bytes) and optional labels in
//! IDX format.
inline void
write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path = "")
{
  if (!ds.image_shape)
    throw FormatError("write_idx: dataset has no image shape");
  std::ofstream out(images_path, std::ios::binary);
  if (!out)
    throw FormatError(images_path + ": cannot write");
  detail::write_be32(out, idx_images_magic);
  detail::write_be32(out, static_cast<uint32_t>(ds.size()));
  detail::write_be32(out, static_cast<uint32_t>(ds.image_shape->first));
  detail::write_be32(out, static_cast<uint32_t>(ds.image_shape->second));
  for (Eigen::Index i = 0; i < ds.x.size(); ++i) {
    // row-major pixel order
    Eigen::Index r = i / ds.x.cols(), c = i % ds.x.cols();
    out.put(static_cast<char>(std::lround(std::clamp(ds.x(r, c), 0.0, 1.0) * 255.0)));
  }
  if (!labels_path.empty() && ds.labels) {
    std::ofstream lout(labels_path, std::ios::binary);
    detail::write_be32(lout, idx_labels_magic);
    detail::write_be32(lout, static_cast<uint32_t>(ds.labels->size()));
    for (int l : *ds.labels)
      lout.put(static_cast<char>(l));
  }
}

} // namespace datasets
} // namespace vinegen
