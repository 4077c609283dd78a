#pragma once

#include "autoencoder.hpp"
#include "model.hpp"
#include "parallel.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vinegen {

struct VcaeConfig
{
  //! hidden layer sizes of the encoder; the decoder mirrors them
  std::vector<size_t> hidden{ 32 };
  size_t latent_dim = 10;
  uint64_t ae_seed = 0;
  TrainConfig train;
  Family family = Family::tll;
  //! capped at latent_dim - 1
  size_t trunc_level = 5;
  //! classes with fewer training rows get no conditional model
  size_t min_class_size = 100;
};

//! Vine copula autoencoder: encoder, a vine distribution on the latent
//! codes, decoder; optionally one latent model per class label.
class VcaeModel
{
public:
  //! called with the class label (or nullopt for the unconditional model)
  //! whenever a latent model is used for sampling.
  using AccessObserver = std::function<void(std::optional<int>)>;

  VcaeModel() = default;

  VcaeModel(DenseAutoencoder ae,
            VineDistribution latent,
            std::map<int, VineDistribution> per_class = {})
    : ae_(std::move(ae))
    , latent_(std::move(latent))
    , per_class_(std::move(per_class))
  {
    if (latent_.dim() != ae_.latent_dim())
      throw DimensionError("VcaeModel: latent model has dimension " + std::to_string(latent_.dim()) +
                           ", autoencoder bottleneck is " + std::to_string(ae_.latent_dim()));
    for (const auto& [label, m] : per_class_)
      if (m.dim() != ae_.latent_dim())
        throw DimensionError("VcaeModel: class " + std::to_string(label) +
                             " model has wrong dimension");
  }

  const DenseAutoencoder& autoencoder() const { return ae_; }
  const VineDistribution& latent_model() const { return latent_; }
  const std::map<int, VineDistribution>& class_models() const { return per_class_; }
  bool conditional() const { return !per_class_.empty(); }
  size_t latent_dim() const { return ae_.latent_dim(); }
  size_t input_dim() const { return ae_.input_dim(); }

  std::vector<int> labels() const
  {
    std::vector<int> out;
    for (const auto& kv : per_class_)
      out.push_back(kv.first);
    return out;
  }

  //! latent model for a label (unconditional when no label is given).
  const VineDistribution& model_for(std::optional<int> label) const
  {
    if (observer_ && *observer_)
      (*observer_)(label);
    if (!label)
      return latent_;
    auto it = per_class_.find(*label);
    if (it == per_class_.end()) {
      std::string known;
      for (int l : labels())
        known += (known.empty() ? "" : ", ") + std::to_string(l);
      throw DomainError("unknown label " + std::to_string(*label) + " (known labels: " +
                        (known.empty() ? "none, model is unconditional" : known) + ")");
    }
    return it->second;
  }

  void set_access_observer(AccessObserver f)
  {
    observer_ = std::make_shared<AccessObserver>(std::move(f));
  }

private:
  DenseAutoencoder ae_;
  VineDistribution latent_;
  std::map<int, VineDistribution> per_class_;
  std::shared_ptr<AccessObserver> observer_;
};

struct VcaeFitResult
{
  VcaeModel model;
  double initial_loss{ 0.0 };
  std::vector<double> loss_history;
  std::vector<std::string> warnings;
};

//! Fits the latent vine models for an already trained autoencoder: encode
//! the data, fit marginals and a vine on the codes, and, if labels are
//! given, one (marginals, vine) pair per class with enough rows.
inline VcaeModel
fit_latent_models(const DenseAutoencoder& ae,
                  const Matrix& data,
                  const std::optional<std::vector<int>>& labels,
                  Family family,
                  size_t trunc_level,
                  size_t min_class_size = 100,
                  std::vector<std::string>* warnings = nullptr)
{
  if (ae.latent_dim() < 2)
    throw DimensionError("vcae: latent dimension must be at least 2");
  size_t trunc = std::clamp<size_t>(trunc_level, 1, ae.latent_dim() - 1);
  Matrix z = ae.encode(data);
  VineDistribution latent = VineDistribution::fit(z, family, trunc);

  std::map<int, VineDistribution> per_class;
  if (labels) {
    if (labels->size() != static_cast<size_t>(data.rows()))
      throw DimensionError("vcae: " + std::to_string(labels->size()) + " labels for " +
                           std::to_string(data.rows()) + " rows");
    std::map<int, std::vector<Eigen::Index>> rows;
    for (size_t i = 0; i < labels->size(); ++i)
      rows[(*labels)[i]].push_back(static_cast<Eigen::Index>(i));
    std::vector<int> fit_labels;
    for (const auto& [label, idx] : rows) {
      if (idx.size() < min_class_size) {
        if (warnings)
          warnings->push_back("class " + std::to_string(label) + " has " +
                              std::to_string(idx.size()) + " rows (< " +
                              std::to_string(min_class_size) + "); no conditional model fitted");
        continue;
      }
      fit_labels.push_back(label);
    }
    std::vector<VineDistribution> fitted(fit_labels.size());
    parallel_for(fit_labels.size(), [&](size_t c) {
      const auto& idx = rows[fit_labels[c]];
      Matrix zc(static_cast<Eigen::Index>(idx.size()), z.cols());
      for (size_t i = 0; i < idx.size(); ++i)
        zc.row(static_cast<Eigen::Index>(i)) = z.row(idx[i]);
      fitted[c] = VineDistribution::fit(zc, family, trunc);
    });
    for (size_t c = 0; c < fit_labels.size(); ++c)
      per_class.emplace(fit_labels[c], std::move(fitted[c]));
  }
  return VcaeModel(ae, std::move(latent), std::move(per_class));
}

//! trains the autoencoder, then fits the latent models.
inline VcaeFitResult
vcae_fit(const Matrix& data, const std::optional<std::vector<int>>& labels, const VcaeConfig& cfg)
{
  DenseAutoencoder init(symmetric_dims(static_cast<size_t>(data.cols()), cfg.hidden, cfg.latent_dim),
                        cfg.ae_seed);
  TrainResult trained = train(std::move(init), data, cfg.train);
  VcaeFitResult out;
  out.initial_loss = trained.initial_loss;
  out.loss_history = std::move(trained.loss_history);
  out.model = fit_latent_models(trained.model, data, labels, cfg.family, cfg.trunc_level,
                                cfg.min_class_size, &out.warnings);
  return out;
}

//! n latent codes from the (class) latent model.
inline Matrix
vcae_sample_latent(const VcaeModel& m, size_t n, uint64_t seed, std::optional<int> label = std::nullopt)
{
  return m.model_for(label).sample(n, seed);
}

//! n decoded samples; pixel values lie in (0,1).
inline Matrix
vcae_sample(const VcaeModel& m, size_t n, uint64_t seed, std::optional<int> label = std::nullopt)
{
  Matrix z = vcae_sample_latent(m, n, seed, label);
  if (n == 0)
    return Matrix(0, static_cast<Eigen::Index>(m.input_dim()));
  return m.autoencoder().decode(z);
}

//! decode((1 - t) encode(a) + t encode(b)) for `steps` values of t evenly
//! spaced over [0, 1].
inline Matrix
latent_interpolate(const VcaeModel& m, const Vector& a, const Vector& b, size_t steps)
{
  if (steps < 2)
    throw DomainError("latent_interpolate: steps must be at least 2");
  const auto& ae = m.autoencoder();
  Matrix za = ae.encode(a.transpose()), zb = ae.encode(b.transpose());
  Matrix z(static_cast<Eigen::Index>(steps), za.cols());
  for (size_t s = 0; s < steps; ++s) {
    double t = static_cast<double>(s) / static_cast<double>(steps - 1);
    if (s == 0)
      z.row(0) = za;
    else if (s + 1 == steps)
      z.row(static_cast<Eigen::Index>(s)) = zb;
    else
      z.row(static_cast<Eigen::Index>(s)) = (1.0 - t) * za + t * zb;
  }
  return ae.decode(z);
}

} // namespace vinegen
