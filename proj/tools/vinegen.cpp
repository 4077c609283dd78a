// vinegen command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure. Errors are written to stderr as one JSON line {code, message}.

#include <vinegen/vinegen.hpp>

#ifdef VINEGEN_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace vinegen;

namespace {

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void
write_text(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FormatError(path + ": cannot write");
  out << text;
}

bool
is_idx(const std::string& bytes)
{
  return bytes.size() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 8 && bytes[3] == 3;
}

// CSV, or IDX images (optionally with a label file) downsampled by `factor`
Dataset
load_data(const std::string& path, const std::string& labels_path, size_t factor, std::string* bytes)
{
  std::string raw = read_file(path);
  if (bytes)
    *bytes = raw;
  if (is_idx(raw)) {
    Dataset ds = datasets::load_idx(path, labels_path);
    return factor > 1 ? datasets::downsample(ds, factor) : ds;
  }
  if (!labels_path.empty())
    throw UsageError("--labels is only used with IDX image files");
  return csv::parse(raw, path);
}

std::vector<std::string>
columns_of(const json& metadata, size_t d)
{
  if (metadata.contains("columns")) {
    auto c = metadata.at("columns").get<std::vector<std::string>>();
    if (c.size() == d)
      return c;
  }
  return csv::default_names(d);
}

std::string
matrix_csv(const Matrix& x, std::vector<std::string> names = {})
{
  Dataset ds;
  ds.x = x;
  return csv::to_string(ds, std::move(names));
}

VineDistribution
load_vine(const std::string& path, json* metadata = nullptr)
{
  auto bundle = ModelBundle::load(path);
  bundle.expect("vine");
  if (metadata)
    *metadata = bundle.metadata;
  return serialize::distribution_from_json(bundle.payload);
}

VcaeModel
load_vcae(const std::string& path)
{
  auto bundle = ModelBundle::load(path);
  bundle.expect("vcae");
  return serialize::vcae_from_json(bundle.payload);
}

// svg ----------------------------------------------------------------------

std::string
svg_scatter(const Matrix& x, size_t ci, size_t cj, const std::vector<std::string>& names)
{
  const double size = 480, margin = 40;
  Eigen::Index a = static_cast<Eigen::Index>(ci), b = static_cast<Eigen::Index>(cj);
  double x0 = x.rows() ? x.col(a).minCoeff() : 0, x1 = x.rows() ? x.col(a).maxCoeff() : 1;
  double y0 = x.rows() ? x.col(b).minCoeff() : 0, y1 = x.rows() ? x.col(b).maxCoeff() : 1;
  if (x1 <= x0)
    x1 = x0 + 1;
  if (y1 <= y0)
    y1 = y0 + 1;
  auto px = [&](double v) { return margin + (v - x0) / (x1 - x0) * (size - 2 * margin); };
  auto py = [&](double v) { return size - margin - (v - y0) / (y1 - y0) * (size - 2 * margin); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
    << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size - 2 * margin
    << "\" height=\"" << size - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"" << size / 2 << "\" y=\"" << size - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << names[ci] << " [" << csv::format_double(x0) << ", " << csv::format_double(x1) << "]</text>\n"
    << "<text x=\"12\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 "
    << size / 2 << ")\">" << names[cj] << " [" << csv::format_double(y0) << ", "
    << csv::format_double(y1) << "]</text>\n<g fill=\"steelblue\" fill-opacity=\"0.5\">\n";
  char buf[64];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.5\"/>\n", px(x(i, a)), py(x(i, b)));
    s << buf;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

// montage of square grayscale images, `per_row` images per row
Eigen::MatrixXi
montage(const Matrix& x, size_t side, size_t count, size_t per_row)
{
  if (side * side != static_cast<size_t>(x.cols()))
    throw DimensionError("plot: rows have " + std::to_string(x.cols()) + " values, expected " +
                         std::to_string(side * side) + " for --image-side " + std::to_string(side));
  count = std::min(count, static_cast<size_t>(x.rows()));
  size_t rows = (count + per_row - 1) / per_row;
  size_t cell = side + 1;
  Eigen::MatrixXi img = Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(std::max<size_t>(1, rows * cell + 1)),
                                                  static_cast<Eigen::Index>(per_row * cell + 1), 128);
  for (size_t k = 0; k < count; ++k) {
    size_t r0 = (k / per_row) * cell + 1, c0 = (k % per_row) * cell + 1;
    for (size_t r = 0; r < side; ++r)
      for (size_t c = 0; c < side; ++c) {
        double v = std::clamp(x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r * side + c)), 0.0, 1.0);
        img(static_cast<Eigen::Index>(r0 + r), static_cast<Eigen::Index>(c0 + c)) =
          static_cast<int>(std::lround(255.0 * (1.0 - v)));
      }
  }
  return img;
}

std::string
svg_images(const Eigen::MatrixXi& img, double scale)
{
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << img.cols() * scale << "\" height=\""
    << img.rows() * scale << "\" viewBox=\"0 0 " << img.cols() << " " << img.rows()
    << "\" shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      int v = img(r, c);
      s << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"1\" height=\"1\" fill=\"rgb(" << v << ","
        << v << "," << v << ")\"/>\n";
    }
  s << "</svg>\n";
  return s.str();
}

std::string
pgm_images(const Eigen::MatrixXi& img)
{
  std::string out = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      out.push_back(static_cast<char>(img(r, c)));
  return out;
}

bool
ends_with(const std::string& s, const std::string& suffix)
{
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void
emit_error(int code, const std::string& message)
{
  std::cerr << json{ { "code", code }, { "message", message } }.dump() << std::endl;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "vinegen: vine copula density estimation, sampling and the vine copula autoencoder" };
  app.require_subcommand(1);
  app.set_version_flag("--version", "vinegen 0.1.0");
  bool stamp = false;
  app.add_flag("--timestamp", stamp, "record the wall-clock time in model bundles (SOURCE_DATE_EPOCH wins)");

  // gen
  std::string gen_kind, out;
  size_t n = 1000, side = 8;
  uint64_t seed = 0;
  bool with_labels = false;
  auto* gen = app.add_subcommand("gen", "generate a toy data set as CSV");
  gen->add_option("kind", gen_kind, "ring8 | grid25 | swissroll | cone3d | digits")
    ->required()
    ->check(CLI::IsMember({ "ring8", "grid25", "swissroll", "cone3d", "digits" }));
  gen->add_option("--n", n, "number of rows")->capture_default_str();
  gen->add_option("--seed", seed, "random seed")->capture_default_str();
  gen->add_option("--side", side, "image side for digits")->capture_default_str();
  gen->add_flag("--with-labels", with_labels, "append the mode index as a label column");
  gen->add_option("--out", out, "output CSV (stdout if omitted)");

  // fit-vine
  std::string input, family = "tll";
  size_t trunc = 0;
  auto* fit = app.add_subcommand("fit-vine", "fit kernel marginals and a vine copula");
  fit->add_option("--input", input, "training CSV")->required();
  fit->add_option("--family", family, "indep | gaussian | tll")
    ->capture_default_str()
    ->check(CLI::IsMember({ "indep", "gaussian", "tll" }));
  fit->add_option("--trunc", trunc, "truncation level (default min(5, d-1))");
  fit->add_option("--out", out, "model bundle (JSON)")->required();

  // sample
  std::string model_path;
  auto* sample = app.add_subcommand("sample", "sample from a fitted vine model");
  sample->add_option("--model", model_path, "vine model bundle")->required();
  sample->add_option("--n", n, "number of rows")->capture_default_str();
  sample->add_option("--seed", seed, "random seed")->capture_default_str();
  sample->add_option("--out", out, "output CSV (stdout if omitted)");

  // logdensity
  auto* logd = app.add_subcommand("logdensity", "log density of rows under a vine model");
  logd->add_option("--model", model_path, "vine model bundle")->required();
  logd->add_option("--input", input, "input CSV")->required();
  logd->add_option("--out", out, "output CSV (stdout if omitted)");

  // ae-train
  std::string data_path, labels_path;
  size_t latent = 10, epochs = 50, batch = 64, factor = 1;
  double lr = 0.001, wd = 0.001;
  std::vector<size_t> hidden{ 32 };
  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_path, "training data: CSV or IDX images")->required();
    cmd->add_option("--labels", labels_path, "IDX label file");
    cmd->add_option("--downsample", factor, "block-average IDX images by this factor")->capture_default_str();
    cmd->add_option("--latent", latent, "bottleneck size")->capture_default_str();
    cmd->add_option("--hidden", hidden, "hidden layer sizes")->delimiter(',')->capture_default_str();
    cmd->add_option("--epochs", epochs)->capture_default_str();
    cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--wd", wd, "weight decay")->capture_default_str();
    cmd->add_option("--batch", batch, "minibatch size")->capture_default_str();
    cmd->add_option("--seed", seed, "initialization and shuffling seed")->capture_default_str();
    cmd->add_option("--out", out, "model bundle (JSON)")->required();
  };
  auto* ae_train = app.add_subcommand("ae-train", "train a dense autoencoder");
  add_train_options(ae_train);

  // vcae
  auto* vcae = app.add_subcommand("vcae", "vine copula autoencoder");
  vcae->require_subcommand(1);
  bool conditional = false;
  auto* vcae_fit_cmd = vcae->add_subcommand("fit", "train the autoencoder and fit latent vines");
  add_train_options(vcae_fit_cmd);
  vcae_fit_cmd->add_option("--family", family, "indep | gaussian | tll")
    ->capture_default_str()
    ->check(CLI::IsMember({ "indep", "gaussian", "tll" }));
  vcae_fit_cmd->add_option("--trunc", trunc, "truncation level (default min(5, z-1))");
  vcae_fit_cmd->add_flag("--conditional", conditional, "fit one latent model per label");

  std::optional<int> label;
  auto* vcae_sample_cmd = vcae->add_subcommand("sample", "decode samples of the latent vine");
  vcae_sample_cmd->add_option("--model", model_path, "vcae model bundle")->required();
  vcae_sample_cmd->add_option("--n", n, "number of images")->capture_default_str();
  vcae_sample_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  vcae_sample_cmd->add_option("--label", label, "class label (conditional models)");
  vcae_sample_cmd->add_option("--out", out, "output CSV, one flattened image per row");

  size_t row_a = 0, row_b = 1, steps = 10;
  auto* vcae_interp = vcae->add_subcommand("interpolate", "decode a latent interpolation of two rows");
  vcae_interp->add_option("--model", model_path, "vcae model bundle")->required();
  vcae_interp->add_option("--data", data_path, "CSV holding the two images")->required();
  vcae_interp->add_option("--a", row_a, "first row (0-based)")->capture_default_str();
  vcae_interp->add_option("--b", row_b, "second row (0-based)")->capture_default_str();
  vcae_interp->add_option("--steps", steps, "number of frames incl. endpoints")->capture_default_str();
  vcae_interp->add_option("--out", out, "output CSV");

  // eval
  std::vector<std::string> metric_names;
  std::string a_path, b_path;
  double alpha = 0.95, bandwidth = 0.0;
  auto* eval = app.add_subcommand("eval", "compare two samples");
  eval->add_option("--metric", metric_names, "mmd | coverage | nll | c2st (repeatable)")
    ->required()
    ->delimiter(',')
    ->check(CLI::IsMember({ "mmd", "coverage", "nll", "c2st" }));
  eval->add_option("--a", a_path, "data CSV (truth)")->required();
  eval->add_option("--b", b_path, "model sample CSV");
  eval->add_option("--model", model_path, "vine model bundle (coverage, nll)");
  eval->add_option("--seed", seed, "c2st split seed")->capture_default_str();
  eval->add_option("--alpha", alpha, "coverage level")->capture_default_str();
  eval->add_option("--bandwidth", bandwidth, "MMD kernel bandwidth (default: median distance)");
  eval->add_option("--out", out, "report JSON (stdout if omitted)");

  // plot
  std::vector<size_t> cols{ 0, 1 };
  size_t image_side = 0, max_images = 100, per_row = 10;
  auto* plot = app.add_subcommand("plot", "scatter plot (SVG) or image grid (SVG/PGM)");
  plot->add_option("--input", input, "CSV")->required();
  plot->add_option("--cols", cols, "two 0-based column indices")->delimiter(',')->expected(2)->capture_default_str();
  plot->add_option("--image-side", image_side, "treat rows as side x side images");
  plot->add_option("--max-images", max_images)->capture_default_str();
  plot->add_option("--per-row", per_row)->capture_default_str();
  plot->add_option("--out", out, "output .svg or .pgm")->required();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }

    if (gen->parsed()) {
      Dataset ds;
      if (gen_kind == "ring8")
        ds = datasets::ring8(n, seed);
      else if (gen_kind == "grid25")
        ds = datasets::grid25(n, seed);
      else if (gen_kind == "swissroll")
        ds = datasets::swiss_roll(n, seed);
      else if (gen_kind == "cone3d")
        ds = datasets::cone3d(n, seed);
      else
        ds = datasets::digits(n, seed, side);
      if (!with_labels && gen_kind != "digits")
        ds.labels.reset();
      write_text(out, csv::to_string(ds));
    } else if (fit->parsed()) {
      std::string bytes = read_file(input);
      std::vector<std::string> names;
      Dataset ds = csv::parse(bytes, input, &names);
      size_t d = ds.dim();
      if (d < 2)
        throw DimensionError(input + ": need at least 2 data columns");
      size_t level = trunc ? trunc : default_trunc_level(d);
      if (level > d - 1)
        throw UsageError("--trunc must lie in [1, " + std::to_string(d - 1) + "]");
      auto dist = VineDistribution::fit(ds.x, family_from_string(family), level);
      ModelBundle b{ "vine", serialize::to_json(dist), bundle_metadata(std::nullopt, bytes, stamp) };
      b.metadata["columns"] = names;
      b.metadata["family"] = family;
      b.metadata["n"] = ds.size();
      b.save(out);
    } else if (sample->parsed()) {
      json meta;
      auto dist = load_vine(model_path, &meta);
      write_text(out, matrix_csv(dist.sample(n, seed), columns_of(meta, dist.dim())));
    } else if (logd->parsed()) {
      auto dist = load_vine(model_path);
      Dataset ds = csv::read_file(input);
      write_text(out, matrix_csv(dist.log_density(ds.x), { "logdensity" }));
    } else if (ae_train->parsed() || vcae_fit_cmd->parsed()) {
      std::string bytes;
      Dataset ds = load_data(data_path, labels_path, factor, &bytes);
      TrainConfig tc;
      tc.learning_rate = lr;
      tc.weight_decay = wd;
      tc.epochs = epochs;
      tc.batch_size = batch;
      tc.seed = seed;
      if (ae_train->parsed()) {
        DenseAutoencoder init(symmetric_dims(ds.dim(), hidden, latent), seed);
        auto res = train(std::move(init), ds.x, tc);
        ModelBundle b{ "ae", serialize::to_json(res.model), bundle_metadata(seed, bytes, stamp) };
        b.metadata["initial_loss"] = res.initial_loss;
        b.metadata["loss_history"] = res.loss_history;
        b.save(out);
      } else {
        if (conditional && !ds.labels)
          throw FormatError(data_path + ": --conditional needs a label column");
        VcaeConfig cfg;
        cfg.hidden = hidden;
        cfg.latent_dim = latent;
        cfg.ae_seed = seed;
        cfg.train = tc;
        cfg.family = family_from_string(family);
        cfg.trunc_level = trunc ? trunc : default_trunc_level(latent);
        auto res = vcae_fit(ds.x, conditional ? ds.labels : std::nullopt, cfg);
        for (const auto& w : res.warnings)
          std::cerr << json{ { "warning", w } }.dump() << std::endl;
        ModelBundle b{ "vcae", serialize::to_json(res.model), bundle_metadata(seed, bytes, stamp) };
        b.metadata["family"] = family;
        b.metadata["initial_loss"] = res.initial_loss;
        b.metadata["loss_history"] = res.loss_history;
        b.save(out);
      }
    } else if (vcae_sample_cmd->parsed()) {
      auto model = load_vcae(model_path);
      write_text(out, matrix_csv(vcae_sample(model, n, seed, label)));
    } else if (vcae_interp->parsed()) {
      auto model = load_vcae(model_path);
      Dataset ds = csv::read_file(data_path);
      if (row_a >= ds.size() || row_b >= ds.size())
        throw UsageError("--a/--b must index rows of " + data_path + " (" + std::to_string(ds.size()) +
                         " rows)");
      Matrix frames = latent_interpolate(model, ds.x.row(static_cast<Eigen::Index>(row_a)).transpose(),
                                         ds.x.row(static_cast<Eigen::Index>(row_b)).transpose(), steps);
      write_text(out, matrix_csv(frames));
    } else if (eval->parsed()) {
      Dataset a = csv::read_file(a_path);
      std::optional<Dataset> b;
      if (!b_path.empty())
        b = csv::read_file(b_path);
      std::optional<VineDistribution> dist;
      if (!model_path.empty())
        dist = load_vine(model_path);
      LogDensity logpdf;
      if (dist)
        logpdf = [&](const Matrix& x) { return dist->log_density(x); };
      EvalReport report;
      report.n_a = a.size();
      report.n_b = b ? b->size() : 0;
      for (const auto& m : metric_names) {
        if ((m == "mmd" || m == "c2st" || m == "coverage") && !b)
          throw UsageError("--metric " + m + " needs --b");
        if ((m == "coverage" || m == "nll") && !dist)
          throw UsageError("--metric " + m + " needs --model");
        if (m == "mmd") {
          double bw = 0.0;
          report.mmd = metrics::mmd(a.x, b->x, bandwidth, &bw);
          report.mmd_bandwidth = bw;
        } else if (m == "c2st") {
          report.c2st_accuracy = metrics::c2st(a.x, b->x, seed);
          report.seed = seed;
        } else if (m == "coverage") {
          report.coverage = metrics::coverage(logpdf, a.x, b->x, alpha);
          report.coverage_alpha = alpha;
        } else {
          report.mean_loglik = metrics::mean_loglik(logpdf, a.x);
        }
      }
      write_text(out, serialize::to_json(report).dump(1) + "\n");
    } else if (plot->parsed()) {
      std::vector<std::string> names;
      Dataset ds = csv::read_file(input, &names);
      if (image_side > 0) {
        auto img = montage(ds.x, image_side, max_images, std::max<size_t>(1, per_row));
        write_text(out, ends_with(out, ".pgm") ? pgm_images(img) : svg_images(img, 4.0));
      } else {
        if (cols.size() != 2 || cols[0] >= ds.dim() || cols[1] >= ds.dim())
          throw UsageError("--cols must name two of the " + std::to_string(ds.dim()) + " columns");
        write_text(out, svg_scatter(ds.x, cols[0], cols[1], names));
      }
    }
  } catch (const UsageError& e) {
    emit_error(1, e.what());
    return 1;
  } catch (const NumericError& e) {
    emit_error(3, e.what());
    return 3;
  } catch (const Error& e) {
    emit_error(2, e.what());
    return 2;
  } catch (const json::exception& e) {
    emit_error(2, e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error(3, e.what());
    return 3;
  }
  return 0;
}
