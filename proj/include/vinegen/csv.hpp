#pragma once

#include "datasets.hpp"
#include "error.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vinegen {

//! 64-bit FNV-1a hash of a byte string.
inline uint64_t
fnv1a64(std::string_view bytes)
{
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string
read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace csv {

//! shortest decimal string that parses back to the same double.
inline std::string
format_double(double v)
{
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string>
default_names(size_t d)
{
  std::vector<std::string> names;
  for (size_t j = 0; j < d; ++j)
    names.push_back("x" + std::to_string(j + 1));
  return names;
}

//! header row of column names (x1..xd unless given), then one row per
//! observation; a trailing `label` column is written when labels exist.
inline void
write(std::ostream& out, const Dataset& ds, std::vector<std::string> names = {})
{
  if (names.empty())
    names = default_names(ds.dim());
  if (names.size() != ds.dim())
    throw DimensionError("csv: " + std::to_string(names.size()) + " column names for " +
                         std::to_string(ds.dim()) + " columns");
  for (size_t j = 0; j < names.size(); ++j)
    out << (j ? "," : "") << names[j];
  if (ds.labels)
    out << (names.empty() ? "" : ",") << "label";
  out << '\n';
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j)
      out << (j ? "," : "") << format_double(ds.x(i, j));
    if (ds.labels)
      out << (ds.x.cols() ? "," : "") << (*ds.labels)[static_cast<size_t>(i)];
    out << '\n';
  }
}

inline std::string
to_string(const Dataset& ds, std::vector<std::string> names = {})
{
  std::ostringstream ss;
  write(ss, ds, std::move(names));
  return ss.str();
}

inline void
write_file(const std::string& path, const Dataset& ds, std::vector<std::string> names = {})
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FormatError(path + ": cannot write");
  write(out, ds, std::move(names));
}

inline void
write_file(const std::string& path, const Matrix& x, std::vector<std::string> names = {})
{
  Dataset ds;
  ds.x = x;
  write_file(path, ds, std::move(names));
}

namespace detail {

inline std::vector<std::string_view>
split(std::string_view line)
{
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
    s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ')
    s.remove_prefix(1);
  return s;
}

} // namespace detail

//! parses CSV text with a header row; a last column named `label` becomes
//! the label vector.
inline Dataset
parse(std::string_view text, const std::string& source = "csv", std::vector<std::string>* names = nullptr)
{
  Dataset ds;
  ds.provenance = source;
  size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      size_t nl = text.find('\n', pos);
      line = detail::trim(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
      pos = nl == std::string_view::npos ? text.size() : nl + 1;
      ++line_no;
      if (!line.empty())
        return true;
    }
    return false;
  };
  std::string_view line;
  if (!next_line(line))
    throw FormatError(source + ": missing header row");
  auto header = detail::split(line);
  bool has_label = detail::trim(header.back()) == "label";
  size_t d = header.size() - (has_label ? 1 : 0);
  if (names) {
    names->clear();
    for (size_t j = 0; j < d; ++j)
      names->emplace_back(detail::trim(header[j]));
  }
  std::vector<double> values;
  std::vector<int> labels;
  size_t n = 0;
  while (next_line(line)) {
    auto fields = detail::split(line);
    if (fields.size() != header.size())
      throw FormatError(source + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(header.size()));
    for (size_t j = 0; j < fields.size(); ++j) {
      auto f = detail::trim(fields[j]);
      if (has_label && j == d) {
        int l = 0;
        auto r = std::from_chars(f.data(), f.data() + f.size(), l);
        if (r.ec != std::errc() || r.ptr != f.data() + f.size() || l < 0)
          throw FormatError(source + ": bad label '" + std::string(f) + "' on line " +
                            std::to_string(line_no));
        labels.push_back(l);
      } else {
        double v = 0.0;
        auto r = std::from_chars(f.data(), f.data() + f.size(), v);
        if (r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v))
          throw FormatError(source + ": bad number '" + std::string(f) + "' on line " +
                            std::to_string(line_no) + ", column " + std::to_string(j + 1));
        values.push_back(v);
      }
    }
    ++n;
  }
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j)
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * d + j];
  if (has_label)
    ds.labels = std::move(labels);
  return ds;
}

inline Dataset
read_file(const std::string& path, std::vector<std::string>* names = nullptr)
{
  return parse(vinegen::read_file(path), path, names);
}

} // namespace csv
} // namespace vinegen
