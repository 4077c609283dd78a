#pragma once

#include "error.hpp"
#include "parallel.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace vinegen {

enum class Activation
{
  relu,
  linear,
  sigmoid
};

enum class Loss
{
  bce, //!< mean per-entry binary cross entropy
  mse  //!< mean per-entry squared error
};

inline std::string
to_string(Activation a)
{
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::linear:
      return "linear";
    default:
      return "sigmoid";
  }
}

inline Activation
activation_from_string(const std::string& s)
{
  if (s == "relu")
    return Activation::relu;
  if (s == "linear")
    return Activation::linear;
  if (s == "sigmoid")
    return Activation::sigmoid;
  throw FormatError("unknown activation '" + s + "'");
}

struct TrainConfig
{
  double learning_rate = 0.001;
  double weight_decay = 0.001;
  size_t epochs = 50;
  size_t batch_size = 64;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  Loss loss = Loss::bce;

  void check() const
  {
    if (!(learning_rate > 0.0))
      throw DomainError("train: learning_rate must be positive");
    if (!(weight_decay >= 0.0))
      throw DomainError("train: weight_decay must be nonnegative");
    if (epochs == 0 || batch_size == 0)
      throw DomainError("train: epochs and batch_size must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
      throw DomainError("train: Adam betas must lie in [0,1)");
  }
};

//! parameter gradients, same layout as the network parameters.
struct Gradients
{
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct GradientCheck
{
  double max_rel_error{ 0.0 };
  size_t checked{ 0 };
};

//! Fully connected autoencoder with layer sizes symmetric about the
//! bottleneck. Layer l maps dims[l] -> dims[l + 1] via x W_l + b_l; rows are
//! observations. The bottleneck layer is linear, the output layer uses
//! `output` and all other layers use `hidden`.
class DenseAutoencoder
{
public:
  //! outputs of a sigmoid layer are kept at this distance from 0 and 1.
  static constexpr double output_eps = 1e-12;
  //! clamp applied to predictions inside the BCE loss
  static constexpr double loss_eps = 1e-7;

  DenseAutoencoder() = default;

  //! Glorot-uniform weights, zero biases.
  DenseAutoencoder(std::vector<size_t> dims,
                   uint64_t seed,
                   Activation hidden = Activation::relu,
                   Activation output = Activation::sigmoid)
    : dims_(std::move(dims))
    , hidden_(hidden)
    , output_(output)
  {
    check_dims();
    std::mt19937_64 rng(seed);
    for (size_t l = 0; l + 1 < dims_.size(); ++l) {
      const double a = std::sqrt(6.0 / static_cast<double>(dims_[l] + dims_[l + 1]));
      std::uniform_real_distribution<double> unif(-a, a);
      Matrix w(static_cast<Eigen::Index>(dims_[l]), static_cast<Eigen::Index>(dims_[l + 1]));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          w(i, j) = unif(rng);
      weights_.push_back(std::move(w));
      biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(dims_[l + 1])));
    }
  }

  //! network from explicit parameters.
  DenseAutoencoder(std::vector<size_t> dims,
                   std::vector<Matrix> weights,
                   std::vector<Vector> biases,
                   Activation hidden = Activation::relu,
                   Activation output = Activation::sigmoid)
    : dims_(std::move(dims))
    , hidden_(hidden)
    , output_(output)
    , weights_(std::move(weights))
    , biases_(std::move(biases))
  {
    check_dims();
    if (weights_.size() != num_layers() || biases_.size() != num_layers())
      throw FormatError("DenseAutoencoder: expected " + std::to_string(num_layers()) + " layers");
    for (size_t l = 0; l < num_layers(); ++l) {
      if (static_cast<size_t>(weights_[l].rows()) != dims_[l] ||
          static_cast<size_t>(weights_[l].cols()) != dims_[l + 1] ||
          static_cast<size_t>(biases_[l].size()) != dims_[l + 1])
        throw FormatError("DenseAutoencoder: layer " + std::to_string(l) +
                          " parameters do not match layer_dims");
    }
  }

  const std::vector<size_t>& layer_dims() const { return dims_; }
  size_t input_dim() const { return dims_.front(); }
  size_t latent_dim() const { return dims_[bottleneck()]; }
  size_t num_layers() const { return dims_.size() - 1; }
  //! index into layer_dims of the bottleneck
  size_t bottleneck() const { return (dims_.size() - 1) / 2; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }
  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }

  Activation activation(size_t layer) const
  {
    if (layer + 1 == num_layers())
      return output_;
    if (layer + 1 == bottleneck())
      return Activation::linear;
    return hidden_;
  }

  Matrix encode(const Matrix& x) const
  {
    check_cols(x, input_dim(), "encode");
    return run(x, 0, bottleneck());
  }

  Matrix decode(const Matrix& z) const
  {
    check_cols(z, latent_dim(), "decode");
    return run(z, bottleneck(), num_layers());
  }

  Matrix reconstruct(const Matrix& x) const
  {
    check_cols(x, input_dim(), "reconstruct");
    return run(x, 0, num_layers());
  }

  //! mean per-entry loss of predictions y for targets t.
  static double loss_value(const Matrix& y, const Matrix& t, Loss loss)
  {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        if (loss == Loss::mse) {
          double e = y(i, j) - t(i, j);
          s += e * e;
        } else {
          double p = std::clamp(y(i, j), loss_eps, 1.0 - loss_eps);
          s -= t(i, j) * std::log(p) + (1.0 - t(i, j)) * std::log(1.0 - p);
        }
      }
    }
    return s / static_cast<double>(y.size());
  }

  //! reconstruction loss on x.
  double loss(const Matrix& x, Loss loss = Loss::bce) const
  {
    return loss_value(reconstruct(x), x, loss);
  }

  //! analytic gradient of the mean reconstruction loss on x (no weight
  //! decay).
  Gradients gradients(const Matrix& x, Loss loss = Loss::bce) const
  {
    return gradients(x, x, loss);
  }

  Gradients gradients(const Matrix& x, const Matrix& target, Loss loss) const
  {
    check_cols(x, input_dim(), "gradients");
    std::vector<Matrix> pre, act;
    forward_all(x, pre, act);
    const Matrix& y = act.back();
    const double scale = 1.0 / static_cast<double>(y.size());
    Matrix delta(y.rows(), y.cols());
    // derivative wrt the output pre-activation
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        double yi = y(i, j), ti = target(i, j);
        double dy;
        if (loss == Loss::mse) {
          dy = 2.0 * (yi - ti);
        } else if (yi <= loss_eps || yi >= 1.0 - loss_eps) {
          dy = 0.0;
        } else if (output_ == Activation::sigmoid) {
          // sigmoid and cross entropy combined
          delta(i, j) = (yi - ti) * scale;
          continue;
        } else {
          dy = (yi - ti) / (yi * (1.0 - yi));
        }
        delta(i, j) = dy * derivative(output_, pre.back()(i, j), yi) * scale;
      }
    }
    Gradients g;
    g.weights.resize(num_layers());
    g.biases.resize(num_layers());
    for (size_t l = num_layers(); l-- > 0;) {
      g.weights[l] = act[l].transpose() * delta;
      g.biases[l] = delta.colwise().sum().transpose();
      if (l == 0)
        break;
      Matrix back = delta * weights_[l].transpose();
      Activation a = activation(l - 1);
      for (Eigen::Index i = 0; i < back.rows(); ++i)
        for (Eigen::Index j = 0; j < back.cols(); ++j)
          back(i, j) *= derivative(a, pre[l](i, j), act[l](i, j));
      delta = std::move(back);
    }
    return g;
  }

  //! Compares analytic gradients with central differences (step 1e-5) on
  //! `n_weights` randomly drawn parameters. Parameters feeding a ReLU whose
  //! pre-activation lies within 1e-3 of the kink, or whose perturbation
  //! changes any ReLU pattern, are redrawn. Relative error is
  //! |a - f| / max(|a|, |f|, 1e-8).
  GradientCheck gradient_check(const Matrix& batch,
                               uint64_t seed = 0,
                               size_t n_weights = 100,
                               Loss loss = Loss::bce) const
  {
    constexpr double step = 1e-5;
    constexpr double kink = 1e-3;
    Gradients g = gradients(batch, loss);
    std::vector<Matrix> pre, act;
    forward_all(batch, pre, act);
    auto base_masks = relu_masks(pre);

    DenseAutoencoder probe = *this;
    std::mt19937_64 rng(seed);
    size_t total = 0;
    for (size_t l = 0; l < num_layers(); ++l)
      total += static_cast<size_t>(weights_[l].size() + biases_[l].size());
    std::uniform_int_distribution<size_t> pick(0, total - 1);

    GradientCheck out;
    for (size_t attempt = 0; out.checked < n_weights && attempt < 50 * n_weights; ++attempt) {
      // locate the parameter
      size_t k = pick(rng), l = 0;
      while (k >= static_cast<size_t>(weights_[l].size() + biases_[l].size())) {
        k -= static_cast<size_t>(weights_[l].size() + biases_[l].size());
        ++l;
      }
      double* p;
      double analytic;
      Eigen::Index col;
      if (k < static_cast<size_t>(weights_[l].size())) {
        Eigen::Index r = static_cast<Eigen::Index>(k) / weights_[l].cols();
        col = static_cast<Eigen::Index>(k) % weights_[l].cols();
        p = &probe.weights_[l](r, col);
        analytic = g.weights[l](r, col);
      } else {
        col = static_cast<Eigen::Index>(k - static_cast<size_t>(weights_[l].size()));
        p = &probe.biases_[l](col);
        analytic = g.biases[l](col);
      }
      if (activation(l) == Activation::relu &&
          (pre[l + 1].col(col).array().abs() < kink).any())
        continue;

      const double saved = *p;
      *p = saved + step;
      std::vector<Matrix> pre_p, act_p;
      probe.forward_all(batch, pre_p, act_p);
      *p = saved - step;
      std::vector<Matrix> pre_m, act_m;
      probe.forward_all(batch, pre_m, act_m);
      *p = saved;
      if (relu_masks(pre_p) != base_masks || relu_masks(pre_m) != base_masks)
        continue;
      double numeric =
        (loss_value(act_p.back(), batch, loss) - loss_value(act_m.back(), batch, loss)) /
        (2.0 * step);
      double denom = std::max({ std::abs(analytic), std::abs(numeric), 1e-8 });
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.checked;
    }
    return out;
  }

private:
  void check_dims() const
  {
    if (dims_.size() < 3 || dims_.size() % 2 == 0)
      throw DimensionError("DenseAutoencoder: layer_dims must have odd length >= 3");
    for (size_t l = 0; l < dims_.size(); ++l) {
      if (dims_[l] == 0)
        throw DimensionError("DenseAutoencoder: layer sizes must be positive");
      if (dims_[l] != dims_[dims_.size() - 1 - l])
        throw DimensionError("DenseAutoencoder: layer_dims must be symmetric");
    }
  }

  static void check_cols(const Matrix& x, size_t want, const char* what)
  {
    if (static_cast<size_t>(x.cols()) != want)
      throw DimensionError(std::string(what) + ": expected " + std::to_string(want) +
                           " columns, got " + std::to_string(x.cols()));
  }

  static double apply(Activation a, double z)
  {
    switch (a) {
      case Activation::relu:
        return z > 0.0 ? z : 0.0;
      case Activation::linear:
        return z;
      default:
        return std::clamp(1.0 / (1.0 + std::exp(-z)), output_eps, 1.0 - output_eps);
    }
  }

  // derivative of the activation, given pre-activation z and output y
  static double derivative(Activation a, double z, double y)
  {
    switch (a) {
      case Activation::relu:
        return z > 0.0 ? 1.0 : 0.0;
      case Activation::linear:
        return 1.0;
      default:
        return y * (1.0 - y);
    }
  }

  Matrix layer(const Matrix& a, size_t l, Matrix* pre = nullptr) const
  {
    Matrix z = a * weights_[l];
    z.rowwise() += biases_[l].transpose();
    if (pre)
      *pre = z;
    Activation act = activation(l);
    if (act != Activation::linear)
      z = z.unaryExpr([act](double v) { return apply(act, v); });
    return z;
  }

  // row by row, so that a row's output does not depend on the batch it
  // came with
  Matrix run(const Matrix& x, size_t from, size_t to) const
  {
    Matrix out(x.rows(), static_cast<Eigen::Index>(dims_[to]));
    parallel_for(static_cast<size_t>(x.rows()), [&](size_t i) {
      Eigen::RowVectorXd a = x.row(static_cast<Eigen::Index>(i));
      for (size_t l = from; l < to; ++l) {
        Eigen::RowVectorXd z = a * weights_[l] + biases_[l].transpose();
        Activation act = activation(l);
        a = z.unaryExpr([act](double v) { return apply(act, v); });
      }
      out.row(static_cast<Eigen::Index>(i)) = a;
    });
    return out;
  }

  // act[l] is the input of layer l, pre[l + 1] its pre-activation
  void forward_all(const Matrix& x, std::vector<Matrix>& pre, std::vector<Matrix>& act) const
  {
    pre.assign(num_layers() + 1, Matrix());
    act.assign(num_layers() + 1, Matrix());
    act[0] = x;
    for (size_t l = 0; l < num_layers(); ++l)
      act[l + 1] = layer(act[l], l, &pre[l + 1]);
  }

  std::vector<std::vector<bool>> relu_masks(const std::vector<Matrix>& pre) const
  {
    std::vector<std::vector<bool>> masks;
    for (size_t l = 0; l < num_layers(); ++l) {
      std::vector<bool> m;
      if (activation(l) == Activation::relu)
        for (Eigen::Index i = 0; i < pre[l + 1].size(); ++i)
          m.push_back(pre[l + 1].data()[i] > 0.0);
      masks.push_back(std::move(m));
    }
    return masks;
  }

  std::vector<size_t> dims_;
  Activation hidden_{ Activation::relu };
  Activation output_{ Activation::sigmoid };
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

struct TrainResult
{
  DenseAutoencoder model;
  //! full-data reconstruction loss before the first update
  double initial_loss{ 0.0 };
  //! full-data reconstruction loss after each epoch
  std::vector<double> loss_history;
};

//! Minibatch Adam on the mean reconstruction loss; weight decay is added to
//! the gradient of every parameter (L2 penalty form). Rows are shuffled
//! each epoch from `cfg.seed`.
inline TrainResult
train(DenseAutoencoder ae, const Matrix& data, const TrainConfig& cfg)
{
  cfg.check();
  if (static_cast<size_t>(data.cols()) != ae.input_dim())
    throw DimensionError("train: data has " + std::to_string(data.cols()) +
                         " columns, network expects " + std::to_string(ae.input_dim()));
  if (data.rows() == 0)
    throw DegenerateInputError("train: empty data");
  if (!data.allFinite())
    throw DegenerateInputError("train: non-finite input");
  if (cfg.loss == Loss::bce && (data.minCoeff() < 0.0 || data.maxCoeff() > 1.0))
    throw DomainError("train: data must lie in [0,1] for the BCE loss");

  const size_t L = ae.num_layers();
  std::vector<Matrix> mw(L), vw(L);
  std::vector<Vector> mb(L), vb(L);
  for (size_t l = 0; l < L; ++l) {
    mw[l] = vw[l] = Matrix::Zero(ae.weights()[l].rows(), ae.weights()[l].cols());
    mb[l] = vb[l] = Vector::Zero(ae.biases()[l].size());
  }
  auto adam = [&](auto& param, auto grad, auto& m, auto& v, double lr_c, double bc2) {
    grad += cfg.weight_decay * param;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    param.array() -= lr_c * m.array() / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  };

  TrainResult out;
  out.initial_loss = ae.loss(data, cfg.loss);
  const size_t n = static_cast<size_t>(data.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  size_t step = 0;
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += cfg.batch_size) {
      size_t end = std::min(n, start + cfg.batch_size);
      Matrix batch(static_cast<Eigen::Index>(end - start), data.cols());
      for (size_t i = start; i < end; ++i)
        batch.row(static_cast<Eigen::Index>(i - start)) = data.row(order[i]);
      Gradients g = ae.gradients(batch, cfg.loss);
      ++step;
      double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      double lr_c = cfg.learning_rate / bc1;
      for (size_t l = 0; l < L; ++l) {
        adam(ae.weights()[l], std::move(g.weights[l]), mw[l], vw[l], lr_c, bc2);
        adam(ae.biases()[l], std::move(g.biases[l]), mb[l], vb[l], lr_c, bc2);
      }
    }
    double loss = ae.loss(data, cfg.loss);
    bool finite = std::isfinite(loss);
    for (size_t l = 0; l < L && finite; ++l)
      finite = ae.weights()[l].allFinite() && ae.biases()[l].allFinite();
    if (!finite)
      throw NumericError("train: loss or parameters not finite at epoch " + std::to_string(epoch + 1) +
                         " (learning rate " + std::to_string(cfg.learning_rate) +
                         "; try a smaller learning rate)");
    out.loss_history.push_back(loss);
  }
  out.model = std::move(ae);
  return out;
}

//! layer sizes [p, hidden..., z, ...hidden reversed, p].
inline std::vector<size_t>
symmetric_dims(size_t input, const std::vector<size_t>& hidden, size_t latent)
{
  std::vector<size_t> dims{ input };
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(latent);
  dims.insert(dims.end(), hidden.rbegin(), hidden.rend());
  dims.push_back(input);
  return dims;
}

} // namespace vinegen
