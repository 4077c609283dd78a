#include <vinegen/autoencoder.hpp>
#include <vinegen/datasets.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace vinegen;

namespace {

Matrix
digit_images(size_t n, uint64_t seed)
{
  return datasets::digits(n, seed).x;
}

// n x p data of exact rank z: 0.5 + s A with small loadings
Matrix
rank_data(size_t n, size_t p, size_t z, uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(z));
  Matrix a(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a.data()[i] = 0.1 * g(rng);
  Matrix x = s * a;
  x.array() += 0.5;
  return x;
}

} // namespace

TEST(Autoencoder, ShapesAndRanges)
{
  DenseAutoencoder ae(symmetric_dims(64, { 32 }, 10), 1);
  EXPECT_EQ(ae.layer_dims(), (std::vector<size_t>{ 64, 32, 10, 32, 64 }));
  EXPECT_EQ(ae.latent_dim(), 10u);
  Matrix x = digit_images(20, 1);
  Matrix z = ae.encode(x);
  EXPECT_EQ(z.cols(), 10);
  Matrix y = ae.decode(z * 100.0);
  EXPECT_EQ(y.cols(), 64);
  EXPECT_GT(y.minCoeff(), 0.0);
  EXPECT_LT(y.maxCoeff(), 1.0);
  EXPECT_THROW(ae.encode(Matrix::Zero(2, 63)), DimensionError);
  EXPECT_THROW(ae.decode(Matrix::Zero(2, 9)), DimensionError);
  EXPECT_THROW(DenseAutoencoder({ 64, 10, 32 }, 0), DimensionError);
  EXPECT_THROW(DenseAutoencoder({ 64, 10 }, 0), DimensionError);
}

TEST(Autoencoder, EncodeIsDeterministic)
{
  DenseAutoencoder ae(symmetric_dims(64, { 32 }, 10), 2);
  Matrix x = digit_images(50, 2);
  Matrix a = ae.encode(x), b = ae.encode(x);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())));
}

TEST(Autoencoder, ZeroWeightsEncodeToBias)
{
  DenseAutoencoder ae(symmetric_dims(6, { 4 }, 3), 3);
  for (auto& w : ae.weights())
    w.setZero();
  for (auto& b : ae.biases())
    b.setZero();
  ae.biases()[1] << 0.3, -1.2, 2.5;
  Matrix x = Matrix::Random(5, 6).cwiseAbs();
  Matrix z = ae.encode(x);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    EXPECT_EQ(z.row(i), ae.biases()[1].transpose());
}

TEST(Autoencoder, OutputBiasGradientClosedForm)
{
  for (double b : { -1.5, 0.0, 0.7 }) {
    for (double t : { 0.0, 1.0 }) {
      std::vector<Matrix> w(2, Matrix::Zero(1, 1));
      std::vector<Vector> bias{ Vector::Zero(1), Vector::Constant(1, b) };
      DenseAutoencoder ae({ 1, 1, 1 }, w, bias);
      Matrix x = Matrix::Zero(1, 1), target = Matrix::Constant(1, 1, t);
      Gradients g = ae.gradients(x, target, Loss::bce);
      double sigma = 1.0 / (1.0 + std::exp(-b));
      EXPECT_EQ(g.biases[1](0), sigma - t);
      EXPECT_EQ(g.weights[1](0, 0), 0.0);
    }
  }
}

TEST(Autoencoder, GradientCheckAtInit)
{
  DenseAutoencoder ae(symmetric_dims(64, { 32 }, 10), 4);
  Matrix batch = digit_images(8, 4);
  auto gc = ae.gradient_check(batch, 1, 200);
  EXPECT_GE(gc.checked, 100u);
  EXPECT_LT(gc.max_rel_error, 1e-4);
  auto mse = ae.gradient_check(batch, 2, 200, Loss::mse);
  EXPECT_GE(mse.checked, 100u);
  EXPECT_LT(mse.max_rel_error, 1e-4);
}

TEST(Autoencoder, GradientCheckAfterTraining)
{
  Matrix x = digit_images(400, 5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  cfg.seed = 5;
  auto res = train(DenseAutoencoder(symmetric_dims(64, { 32 }, 10), 5), x, cfg);
  auto gc = res.model.gradient_check(x.topRows(8), 3, 200);
  EXPECT_GE(gc.checked, 100u);
  EXPECT_LT(gc.max_rel_error, 1e-3);
}

TEST(Autoencoder, LinearNetworkReachesPcaResidual)
{
  const size_t z = 4;
  Matrix x = rank_data(500, 64, z, 6);
  TrainConfig cfg;
  cfg.loss = Loss::mse;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.003;
  cfg.epochs = 300;
  cfg.batch_size = 50;
  cfg.seed = 6;
  DenseAutoencoder ae({ 64, z, 64 }, 6, Activation::linear, Activation::linear);
  auto res = train(ae, x, cfg);
  EXPECT_LT(res.loss_history.back(), 1e-3);
  double mse = (res.model.reconstruct(x) - x).squaredNorm() / static_cast<double>(x.size());
  EXPECT_LT(mse, 1e-3);
}

TEST(Autoencoder, ConstantDataApproachesEntropyBound)
{
  Matrix x = Matrix::Constant(200, 16, 0.5);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 50;
  cfg.learning_rate = 0.01;
  cfg.seed = 7;
  auto res = train(DenseAutoencoder(symmetric_dims(16, { 8 }, 2), 7), x, cfg);
  EXPECT_NEAR(res.loss_history.back(), std::log(2.0), 1e-4);
  EXPECT_GE(res.loss_history.back(), std::log(2.0) - 1e-12);
}

TEST(Autoencoder, DigitsTrainingProgressAndLatents)
{
  Matrix x = digit_images(1000, 8);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 64;
  cfg.seed = 8;
  auto res = train(DenseAutoencoder(symmetric_dims(64, { 32 }, 10), 8), x, cfg);
  EXPECT_LT(res.loss_history.back(), 0.5 * res.initial_loss);

  // exponentially smoothed loss trends downwards
  double smooth = res.loss_history.front(), first_smooth = 0.0;
  const double w = 2.0 / (10 + 1);
  for (size_t e = 0; e < res.loss_history.size(); ++e) {
    smooth = w * res.loss_history[e] + (1 - w) * smooth;
    if (e == 9)
      first_smooth = smooth;
  }
  EXPECT_LT(smooth, first_smooth);

  // reported loss is the full-data reconstruction loss
  EXPECT_NEAR(res.model.loss(x), res.loss_history.back(), 1e-9);
  double bce = DenseAutoencoder::loss_value(res.model.decode(res.model.encode(x)), x, Loss::bce);
  EXPECT_NEAR(bce, res.loss_history.back(), 1e-9);

  Matrix z = res.model.encode(x);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    double var = (z.col(j).array() - z.col(j).mean()).square().mean();
    EXPECT_GT(var, 1e-6) << "latent " << j;
  }

  // interpolation between two held-out images varies monotonically in most
  // pixels
  Matrix test = digit_images(2, 9);
  Matrix za = res.model.encode(test.topRows(1)), zb = res.model.encode(test.bottomRows(1));
  const int steps = 10;
  Matrix frames(steps, 64);
  for (int s = 0; s < steps; ++s) {
    double t = s / double(steps - 1);
    frames.row(s) = res.model.decode((1 - t) * za + t * zb);
  }
  int monotone = 0;
  for (Eigen::Index j = 0; j < 64; ++j) {
    bool up = true, down = true;
    for (int s = 1; s < steps; ++s) {
      up = up && frames(s, j) >= frames(s - 1, j);
      down = down && frames(s, j) <= frames(s - 1, j);
    }
    monotone += up || down;
  }
  EXPECT_GE(monotone, 0.6 * 64);
}

TEST(Autoencoder, TrainingIsBitReproducible)
{
  Matrix x = digit_images(200, 10);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 10;
  DenseAutoencoder init(symmetric_dims(64, { 32 }, 10), 10);
  auto a = train(init, x, cfg);
  auto b = train(init, x, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  for (size_t l = 0; l < a.model.num_layers(); ++l)
    EXPECT_EQ(a.model.weights()[l], b.model.weights()[l]);
}

TEST(Autoencoder, TrainErrors)
{
  DenseAutoencoder ae(symmetric_dims(4, {}, 2), 0);
  TrainConfig cfg;
  EXPECT_THROW(train(ae, Matrix::Constant(10, 3, 0.5), cfg), DimensionError);
  EXPECT_THROW(train(ae, Matrix::Constant(10, 4, 1.5), cfg), DomainError);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(ae, Matrix::Constant(10, 4, 0.5), cfg), DomainError);
  // divergent linear training reports a numeric failure
  TrainConfig wild;
  wild.loss = Loss::mse;
  wild.learning_rate = 1e200;
  wild.weight_decay = 0.0;
  wild.epochs = 5;
  DenseAutoencoder lin({ 4, 2, 4 }, 0, Activation::linear, Activation::linear);
  EXPECT_THROW(train(lin, Matrix::Random(20, 4), wild), NumericError);
}
