#pragma once

#include "autoencoder.hpp"
#include "bicop.hpp"
#include "csv.hpp"
#include "marginals.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "vine.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>

namespace vinegen {

using json = nlohmann::json;

inline constexpr int format_version = 1;

namespace serialize {

namespace detail {

template<class T>
T
get(const json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("model json: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model json: field '") + key + "': " + e.what());
  }
}

} // namespace detail

// marginal ----------------------------------------------------------------

inline json
to_json(const KernelMarginal& m)
{
  return { { "bandwidth", m.bandwidth() }, { "points", m.sample_points() } };
}

inline KernelMarginal
marginal_from_json(const json& j)
{
  return KernelMarginal(detail::get<std::vector<double>>(j, "points"),
                        detail::get<double>(j, "bandwidth"));
}

// pair-copula --------------------------------------------------------------

inline json
to_json(const BivariateCopula& c)
{
  json j = { { "family", to_string(c.family()) } };
  if (c.family() == Family::gaussian)
    j["rho"] = c.rho();
  if (c.family() == Family::tll)
    j["grid"] = { { "nodes", c.grid().nodes }, { "values", c.grid().values } };
  return j;
}

inline BivariateCopula
bicop_from_json(const json& j)
{
  Family f = family_from_string(detail::get<std::string>(j, "family"));
  switch (f) {
    case Family::independence:
      return BivariateCopula::independence();
    case Family::gaussian:
      return BivariateCopula::gaussian(detail::get<double>(j, "rho"));
    default: {
      json g = detail::get<json>(j, "grid");
      DensityGrid grid{ detail::get<std::vector<double>>(g, "nodes"),
                        detail::get<std::vector<double>>(g, "values") };
      return BivariateCopula::from_grid(std::move(grid), false);
    }
  }
}

// vine ---------------------------------------------------------------------

inline json
to_json(const VineModel& v)
{
  json trees = json::array();
  for (size_t m = 0; m < v.structure().num_trees(); ++m) {
    json tree = json::array();
    for (size_t e = 0; e < v.structure().tree(m).size(); ++e) {
      const auto& edge = v.structure().tree(m)[e];
      tree.push_back({ { "ends", edge.ends },
                       { "j", edge.j },
                       { "k", edge.k },
                       { "cond", edge.cond },
                       { "copula", to_json(v.pair_copula(m, e)) } });
    }
    trees.push_back(std::move(tree));
  }
  return { { "dim", v.dim() }, { "trunc_level", v.trunc_level() }, { "trees", trees } };
}

inline VineModel
vine_from_json(const json& j)
{
  size_t d = detail::get<size_t>(j, "dim");
  json trees = detail::get<json>(j, "trees");
  if (!trees.is_array())
    throw FormatError("model json: 'trees' must be an array");
  std::vector<std::vector<std::array<size_t, 2>>> ends;
  std::vector<std::vector<BivariateCopula>> copulas;
  for (const auto& tree : trees) {
    ends.emplace_back();
    copulas.emplace_back();
    for (const auto& edge : tree) {
      ends.back().push_back(detail::get<std::array<size_t, 2>>(edge, "ends"));
      copulas.back().push_back(bicop_from_json(detail::get<json>(edge, "copula")));
    }
  }
  auto structure = RVineStructure::from_ends(d, ends);
  for (size_t m = 0; m < structure.num_trees(); ++m) {
    for (size_t e = 0; e < structure.tree(m).size(); ++e) {
      const auto& edge = structure.tree(m)[e];
      const auto& stored = trees[m][e];
      if (edge.j != detail::get<size_t>(stored, "j") || edge.k != detail::get<size_t>(stored, "k") ||
          edge.cond != detail::get<std::vector<size_t>>(stored, "cond"))
        throw FormatError("model json: tree " + std::to_string(m + 1) + " edge " +
                          std::to_string(e) + " labels do not match its ends");
    }
  }
  return VineModel(std::move(structure), std::move(copulas), detail::get<size_t>(j, "trunc_level"));
}

inline json
to_json(const VineDistribution& v)
{
  json margins = json::array();
  for (const auto& m : v.marginals())
    margins.push_back(to_json(m));
  return { { "marginals", margins }, { "vine", to_json(v.vine()) } };
}

inline VineDistribution
distribution_from_json(const json& j)
{
  std::vector<KernelMarginal> margins;
  for (const auto& m : detail::get<json>(j, "marginals"))
    margins.push_back(marginal_from_json(m));
  return { std::move(margins), vine_from_json(detail::get<json>(j, "vine")) };
}

// autoencoder --------------------------------------------------------------

//! weights are stored row-major with shape [in, out].
inline json
to_json(const DenseAutoencoder& ae)
{
  json layers = json::array();
  for (size_t l = 0; l < ae.num_layers(); ++l) {
    const Matrix& w = ae.weights()[l];
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        flat.push_back(w(r, c));
    const Vector& b = ae.biases()[l];
    layers.push_back({ { "weights", flat }, { "bias", std::vector<double>(b.data(), b.data() + b.size()) } });
  }
  return { { "layer_dims", ae.layer_dims() },
           { "hidden_activation", to_string(ae.hidden_activation()) },
           { "output_activation", to_string(ae.output_activation()) },
           { "layers", layers } };
}

inline DenseAutoencoder
autoencoder_from_json(const json& j)
{
  auto dims = detail::get<std::vector<size_t>>(j, "layer_dims");
  json layers = detail::get<json>(j, "layers");
  if (dims.size() < 2 || layers.size() != dims.size() - 1)
    throw FormatError("model json: layer count does not match layer_dims");
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    auto flat = detail::get<std::vector<double>>(layers[l], "weights");
    auto bias = detail::get<std::vector<double>>(layers[l], "bias");
    if (flat.size() != dims[l] * dims[l + 1] || bias.size() != dims[l + 1])
      throw FormatError("model json: layer " + std::to_string(l) + " has the wrong size");
    Matrix w(static_cast<Eigen::Index>(dims[l]), static_cast<Eigen::Index>(dims[l + 1]));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = flat[static_cast<size_t>(r * w.cols() + c)];
    weights.push_back(std::move(w));
    biases.push_back(Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size())));
  }
  return DenseAutoencoder(std::move(dims), std::move(weights), std::move(biases),
                          activation_from_string(detail::get<std::string>(j, "hidden_activation")),
                          activation_from_string(detail::get<std::string>(j, "output_activation")));
}

// vcae ---------------------------------------------------------------------

inline json
to_json(const VcaeModel& m)
{
  json classes = json::array();
  for (const auto& [label, model] : m.class_models())
    classes.push_back({ { "label", label }, { "model", to_json(model) } });
  return { { "ae", to_json(m.autoencoder()) },
           { "latent", to_json(m.latent_model()) },
           { "classes", classes } };
}

inline VcaeModel
vcae_from_json(const json& j)
{
  std::map<int, VineDistribution> classes;
  for (const auto& c : detail::get<json>(j, "classes"))
    classes.emplace(detail::get<int>(c, "label"), distribution_from_json(detail::get<json>(c, "model")));
  return VcaeModel(autoencoder_from_json(detail::get<json>(j, "ae")),
                   distribution_from_json(detail::get<json>(j, "latent")), std::move(classes));
}

// evaluation report --------------------------------------------------------

inline json
to_json(const EvalReport& r)
{
  json j = { { "n_a", r.n_a }, { "n_b", r.n_b } };
  auto put = [&](const char* key, const auto& v) {
    if (v)
      j[key] = *v;
  };
  put("mmd", r.mmd);
  put("mmd_bandwidth", r.mmd_bandwidth);
  put("coverage", r.coverage);
  put("coverage_alpha", r.coverage_alpha);
  put("mean_loglik", r.mean_loglik);
  put("c2st_accuracy", r.c2st_accuracy);
  put("seed", r.seed);
  return j;
}

} // namespace serialize

//! Versioned model file: {format_version, kind, metadata, payload}.
struct ModelBundle
{
  std::string kind; //!< marginal | bicop | vine | ae | vcae
  json payload;
  json metadata = json::object();

  static constexpr const char* kinds[] = { "marginal", "bicop", "vine", "ae", "vcae" };

  json to_json() const
  {
    return { { "format_version", format_version },
             { "kind", kind },
             { "metadata", metadata },
             { "payload", payload } };
  }

  std::string dump() const { return to_json().dump(1) + "\n"; }

  static ModelBundle from_json(const json& j)
  {
    int version = serialize::detail::get<int>(j, "format_version");
    if (version != format_version)
      throw FormatError("model bundle: unsupported format_version " + std::to_string(version) +
                        " (this build reads version " + std::to_string(format_version) + ")");
    ModelBundle b;
    b.kind = serialize::detail::get<std::string>(j, "kind");
    if (std::find(std::begin(kinds), std::end(kinds), b.kind) == std::end(kinds))
      throw FormatError("model bundle: unknown kind '" + b.kind + "'");
    b.payload = serialize::detail::get<json>(j, "payload");
    if (j.contains("metadata"))
      b.metadata = j.at("metadata");
    return b;
  }

  static ModelBundle parse(const std::string& text, const std::string& source = "bundle")
  {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(source + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    return from_json(j);
  }

  static ModelBundle load(const std::string& path) { return parse(read_file(path), path); }

  void save(const std::string& path) const
  {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw FormatError(path + ": cannot write");
    out << dump();
  }

  //! fails unless the bundle holds the given kind.
  void expect(const std::string& want) const
  {
    if (kind != want)
      throw FormatError("model bundle: expected kind '" + want + "', found '" + kind + "'");
  }
};

//! 16 hex digits.
inline std::string
hash_string(uint64_t h)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

//! UTC creation time taken from SOURCE_DATE_EPOCH, or from the clock when
//! `wall_clock` is set; nullopt otherwise so that output stays reproducible.
inline std::optional<std::string>
creation_timestamp(bool wall_clock = false)
{
  std::time_t t;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  else if (wall_clock)
    t = std::time(nullptr);
  else
    return std::nullopt;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

inline json
bundle_metadata(std::optional<uint64_t> seed, const std::string& data_bytes, bool wall_clock = false)
{
  json m = { { "data_hash", hash_string(fnv1a64(data_bytes)) } };
  if (auto t = creation_timestamp(wall_clock))
    m["created"] = *t;
  if (seed)
    m["seed"] = *seed;
  return m;
}

} // namespace vinegen
