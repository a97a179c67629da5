#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gradient_check.hpp"
#include "sfdnn/error.hpp"
#include "sfdnn/fdnn.hpp"
#include "sfdnn/spatial.hpp"

using namespace sfdnn;

namespace {

NetworkArchitecture make_arch(std::vector<int> basis, int scalars, std::vector<int> hidden, Activation g) {
  NetworkArchitecture a;
  a.basis_sizes = std::move(basis);
  a.num_scalars = scalars;
  a.activations.assign(hidden.size(), g);
  a.hidden_sizes = std::move(hidden);
  return a;
}

struct Toy {
  Eigen::MatrixXd features, scalars;
  Eigen::VectorXd y;
};

Toy random_toy(int n, const NetworkArchitecture& a, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Toy t{Eigen::MatrixXd(n, a.functional_width()), Eigen::MatrixXd(n, a.num_scalars), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < t.features.size(); ++k) t.features.data()[k] = z(rng);
  for (Eigen::Index k = 0; k < t.scalars.size(); ++k) t.scalars.data()[k] = z(rng);
  for (auto& v : t.y) v = z(rng);
  return t;
}

SpatialWeightMatrix line_weights(int n) { return build_inverse_distance_weights(n); }

}  // namespace

TEST(Architecture, Validation) {
  EXPECT_NO_THROW(make_arch({5}, 2, {4}, Activation::kRelu).validate());
  EXPECT_THROW(make_arch({5}, 2, {}, Activation::kRelu).validate(), Error);
  EXPECT_THROW(make_arch({5}, 2, {0}, Activation::kRelu).validate(), Error);
  NetworkArchitecture mismatched = make_arch({5}, 2, {4, 3}, Activation::kRelu);
  mismatched.activations.pop_back();
  EXPECT_THROW(mismatched.validate(), Error);
  EXPECT_EQ(make_arch({5, 3}, 2, {4, 2}, Activation::kRelu).weight_count(), 4 * 10 + 2 * 4 + 2);
}

TEST(Init, ShapesAndDeterminism) {
  const NetworkArchitecture a = make_arch({5}, 2, {4}, Activation::kRelu);
  const NetworkParameters p = init_parameters(a, 11);
  EXPECT_EQ(p.functional.rows(), 4);
  EXPECT_EQ(p.functional.cols(), 5);
  EXPECT_EQ(p.functional_coefficients(2, 0).size(), 5);
  EXPECT_EQ(p.scalar.rows(), 4);
  EXPECT_EQ(p.scalar.cols(), 2);
  ASSERT_EQ(p.dense.size(), 1u);
  EXPECT_EQ(p.dense[0].rows(), 1);
  EXPECT_EQ(p.dense[0].cols(), 4);
  EXPECT_EQ(p.biases.size(), 2u);
  EXPECT_EQ(p.biases[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(p == init_parameters(a, 11));
  EXPECT_FALSE(p == init_parameters(a, 12));
}

TEST(Init, GlorotBounds) {
  const NetworkArchitecture a = make_arch({6, 4}, 3, {20, 10}, Activation::kTanh);
  const NetworkParameters p = init_parameters(a, 5);
  const double first = std::sqrt(6.0 / (13 + 20));
  EXPECT_LE(p.functional.cwiseAbs().maxCoeff(), first);
  EXPECT_LE(p.scalar.cwiseAbs().maxCoeff(), first);
  EXPECT_LE(p.dense[0].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 30.0));
  EXPECT_LE(p.dense[1].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 11.0));
  // Uniform on [-b, b]: a spread of 200 draws should use most of the range.
  EXPECT_GT(p.functional.cwiseAbs().maxCoeff(), 0.8 * first);
}

TEST(Forward, ZeroParametersGiveZero) {
  const NetworkArchitecture a = make_arch({3}, 1, {4}, Activation::kIdentity);
  const NetworkParameters p = init_parameters(a, 1).zeros_like();
  const Toy t = random_toy(6, a, 2);
  EXPECT_EQ(predict(p, t.features, t.scalars).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, HandComputedRelu) {
  // One functional predictor with M = 2, one scalar, hidden layer of 2 relu units.
  const NetworkArchitecture a = make_arch({2}, 1, {2}, Activation::kRelu);
  NetworkParameters p = init_parameters(a, 1);
  p.functional << 1.0, -2.0, 0.5, 0.25;
  p.scalar << 3.0, -1.0;
  p.biases[0] << 0.1, -0.2;
  p.dense[0] << 2.0, -1.5;
  p.biases[1] << 0.3;
  Eigen::MatrixXd f(4, 2);
  f << 1.0, 0.0, 0.0, 1.0, 2.0, 1.0, -1.0, 0.5;
  Eigen::MatrixXd s(4, 1);
  s << 0.0, 1.0, -0.5, 2.0;
  Eigen::VectorXd expected(4);
  for (int i = 0; i < 4; ++i) {
    double out = 0.3;
    const double w[2][2] = {{1.0, -2.0}, {0.5, 0.25}};
    const double omega[2] = {3.0, -1.0}, b[2] = {0.1, -0.2}, v[2] = {2.0, -1.5};
    for (int l = 0; l < 2; ++l) {
      const double pre = w[l][0] * f(i, 0) + w[l][1] * f(i, 1) + omega[l] * s(i, 0) + b[l];
      out += v[l] * (pre > 0.0 ? pre : 0.0);
    }
    expected(i) = out;
  }
  EXPECT_LT((predict(p, f, s) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(expected(0), 2.0 * 1.1 - 1.5 * 0.3 + 0.3, 1e-15);
}

TEST(Forward, ContextFiltersFirstLayerOnly) {
  const NetworkArchitecture a = make_arch({3}, 2, {4, 3}, Activation::kTanh);
  const NetworkParameters p = init_parameters(a, 9);
  const Toy t = random_toy(8, a, 4);
  const SpatialWeightMatrix w = line_weights(8);
  const SpatialContext ctx(w, 0.4);
  const ForwardResult got = forward(p, t.features, t.scalars, &ctx);
  const Eigen::MatrixXd pre = apply_spatial_filter(w, 0.4, t.features * p.functional.transpose() +
                                                              t.scalars * p.scalar.transpose());
  Eigen::MatrixXd expected_pre = pre.rowwise() + p.biases[0].transpose();
  EXPECT_LT((got.cache.pre_activations[0] - expected_pre).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(got.predictions, predict(p, t.features, t.scalars, &ctx));
}

TEST(Forward, ShapeErrors) {
  const NetworkArchitecture a = make_arch({3}, 2, {4}, Activation::kRelu);
  const NetworkParameters p = init_parameters(a, 1);
  const Toy t = random_toy(5, a, 1);
  EXPECT_THROW(predict(p, t.features.leftCols(2), t.scalars), Error);
  EXPECT_THROW(predict(p, t.features, t.scalars.leftCols(1)), Error);
  const SpatialContext ctx(line_weights(6), 0.2);
  EXPECT_THROW(predict(p, t.features, t.scalars, &ctx), Error);
}

TEST(Loss, Examples) {
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
  EXPECT_EQ(loss(y, y), 0.0);
  EXPECT_EQ(loss(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.0, 0.0)), 1.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Eigen::VectorXd a(7), b(7);
  double direct = 0.0;
  for (int i = 0; i < 7; ++i) {
    a(i) = z(rng);
    b(i) = z(rng);
    direct += (a(i) - b(i)) * (a(i) - b(i));
  }
  EXPECT_NEAR(loss(a, b), direct / 7.0, 1e-14);
  EXPECT_THROW(loss(a, y), Error);
}

TEST(Gradients, MatchFiniteDifferences) {
  const Activation kinds[] = {Activation::kTanh, Activation::kSigmoid, Activation::kIdentity};
  for (int trial = 0; trial < 3; ++trial) {
    const NetworkArchitecture a = make_arch({4, 4}, 2, {5, 3}, kinds[trial]);
    NetworkParameters p = init_parameters(a, 100 + static_cast<unsigned>(trial));
    for (auto& b : p.biases) b.setRandom();
    const Toy t = random_toy(15, a, 200 + static_cast<unsigned>(trial));
    EXPECT_LT(gradcheck::compare(p, t.features, t.scalars, t.y, nullptr).max_relative_error, 1e-4);
    const SpatialContext ctx(line_weights(15), 0.6);
    EXPECT_LT(gradcheck::compare(p, t.features, t.scalars, t.y, &ctx).max_relative_error, 1e-4);
  }
}

TEST(Gradients, BatchRowsMatchSubsetProblem) {
  const NetworkArchitecture a = make_arch({3}, 1, {4}, Activation::kTanh);
  const NetworkParameters p = init_parameters(a, 4);
  const Toy t = random_toy(10, a, 8);
  const std::vector<int> rows = {7, 2, 5};
  const NetworkParameters batch = gradients(p, t.features, t.scalars, t.y, nullptr, rows);
  const NetworkParameters subset =
      gradients(p, t.features(rows, Eigen::all), t.scalars(rows, Eigen::all), t.y(rows));
  EXPECT_LT((batch.functional - subset.functional).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((batch.dense[0] - subset.dense[0]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gradients, ZeroResidualsGiveZero) {
  const NetworkArchitecture a = make_arch({4}, 2, {5, 3}, Activation::kRelu);
  const NetworkParameters p = init_parameters(a, 6);
  const Toy t = random_toy(12, a, 6);
  const SpatialContext ctx(line_weights(12), 0.5);
  for (const SpatialContext* c : {static_cast<const SpatialContext*>(nullptr), &ctx}) {
    const Eigen::VectorXd fitted = predict(p, t.features, t.scalars, c);
    const NetworkParameters g = gradients(p, t.features, t.scalars, fitted, c);
    g.for_each_tensor([](const auto& m) { EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-12); });
  }
}

TEST(Degeneration, ZeroRhoMatchesUnfiltered) {
  const NetworkArchitecture a = make_arch({4, 4}, 2, {5, 3}, Activation::kTanh);
  const NetworkParameters p = init_parameters(a, 3);
  const Toy t = random_toy(14, a, 3);
  const SpatialContext ctx(line_weights(14), 0.0);
  EXPECT_LT((predict(p, t.features, t.scalars, &ctx) - predict(p, t.features, t.scalars)).cwiseAbs().maxCoeff(),
            1e-12);
  NetworkParameters with = gradients(p, t.features, t.scalars, t.y, &ctx);
  NetworkParameters without = gradients(p, t.features, t.scalars, t.y);
  const auto a_entries = gradcheck::entries(with);
  const auto b_entries = gradcheck::entries(without);
  for (std::size_t k = 0; k < a_entries.size(); ++k) EXPECT_NEAR(*a_entries[k], *b_entries[k], 1e-12);
}

TEST(Predict, RowsIndependentWithoutContext) {
  const NetworkArchitecture a = make_arch({3}, 2, {6}, Activation::kRelu);
  const NetworkParameters p = init_parameters(a, 2);
  const Toy t = random_toy(9, a, 2);
  const Eigen::VectorXd full = predict(p, t.features, t.scalars);
  for (int i = 0; i < 9; ++i) {
    EXPECT_EQ(predict(p, t.features.row(i), t.scalars.row(i))(0), full(i));
  }
}

TEST(Predict, ContextCouplesRows) {
  const NetworkArchitecture a = make_arch({3}, 2, {6}, Activation::kIdentity);
  const NetworkParameters p = init_parameters(a, 2);
  Toy t = random_toy(9, a, 2);
  const SpatialContext ctx(line_weights(9), 0.5);
  const Eigen::VectorXd before = predict(p, t.features, t.scalars, &ctx);
  t.scalars(4, 0) += 1.0;
  const Eigen::VectorXd after = predict(p, t.features, t.scalars, &ctx);
  for (int i = 0; i < 9; ++i) EXPECT_NE(before(i), after(i)) << i;
}

TEST(Predict, PermutationEquivariant) {
  const NetworkArchitecture a = make_arch({3}, 1, {5}, Activation::kTanh);
  const NetworkParameters p = init_parameters(a, 8);
  const Toy t = random_toy(10, a, 8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(10, 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) w(i, j) = i == j ? 0.0 : unif(rng);
    w.row(i) /= w.row(i).sum();
  }
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Eigen::MatrixXd wp = w(perm, perm);
  const SpatialContext ctx(SpatialWeightMatrix::from_dense(w, true), 0.7);
  const SpatialContext ctx_p(SpatialWeightMatrix::from_dense(wp, true), 0.7);
  const Eigen::VectorXd base = predict(p, t.features, t.scalars, &ctx);
  const Eigen::VectorXd permuted = predict(p, t.features(perm, Eigen::all), t.scalars(perm, Eigen::all), &ctx_p);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(permuted(i), base(perm[static_cast<std::size_t>(i)]), 1e-12);
}

class Training : public ::testing::Test {
 protected:
  // y = F a + S b + 0.7 + noise with a linear network able to represent it exactly.
  void SetUp() override {
    arch = make_arch({4}, 2, {3}, Activation::kIdentity);
    data = random_toy(200, arch, 21);
    std::mt19937_64 rng(22);
    std::normal_distribution<double> z;
    Eigen::Vector4d coef(1.0, -0.5, 0.25, 2.0);
    data.y = data.features * coef + data.scalars * Eigen::Vector2d(-1.0, 0.5);
    for (auto& v : data.y) v += 0.7 + 0.3 * z(rng);
  }
  double ols_mse() const {
    Eigen::MatrixXd x(200, 7);
    x << Eigen::VectorXd::Ones(200), data.features, data.scalars;
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(data.y);
    return (data.y - x * beta).squaredNorm() / 200.0;
  }
  NetworkArchitecture arch;
  Toy data;
};

TEST_F(Training, ReachesLeastSquaresLoss) {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.batch_size = 20;
  c.max_epochs = 500;
  c.seed = 3;
  const TrainResult r = train(arch, c, data.features, data.scalars, data.y);
  EXPECT_LE(r.loss_trace.back(), 1.05 * ols_mse());
  EXPECT_EQ(r.best_epoch, static_cast<int>(r.loss_trace.size()));
}

TEST_F(Training, LargeTauStopsAfterOneEpoch) {
  TrainConfig c;
  c.early_stop_threshold = 1e12;
  const TrainResult r = train(arch, c, data.features, data.scalars, data.y);
  EXPECT_EQ(r.loss_trace.size(), 1u);
}

TEST_F(Training, TauStopsWhenChangeIsSmall) {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.early_stop_threshold = 1e-4;
  c.max_epochs = 2000;
  const TrainResult r = train(arch, c, data.features, data.scalars, data.y);
  ASSERT_GE(r.loss_trace.size(), 2u);
  ASSERT_LT(r.loss_trace.size(), 2000u);
  const auto k = r.loss_trace.size() - 1;
  EXPECT_LT(std::abs(r.loss_trace[k - 1] - r.loss_trace[k]), 1e-4);
  for (std::size_t e = 1; e < k; ++e) EXPECT_GE(std::abs(r.loss_trace[e - 1] - r.loss_trace[e]), 1e-4);
}

TEST_F(Training, DeterministicPerSeed) {
  TrainConfig c;
  c.max_epochs = 30;
  c.validation_fraction = 0.2;
  c.seed = 77;
  const TrainResult a = train(arch, c, data.features, data.scalars, data.y);
  const TrainResult b = train(arch, c, data.features, data.scalars, data.y);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.validation_trace, b.validation_trace);
  EXPECT_TRUE(a.params == b.params);
  c.seed = 78;
  EXPECT_NE(train(arch, c, data.features, data.scalars, data.y).loss_trace, a.loss_trace);
}

TEST_F(Training, FullBatchLossNeverRisesMoreThanOnePercent) {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 200;
  c.max_epochs = 400;
  const TrainResult r = train(arch, c, data.features, data.scalars, data.y);
  for (std::size_t e = 1; e < r.loss_trace.size(); ++e) {
    EXPECT_LE(r.loss_trace[e], 1.01 * r.loss_trace[e - 1]) << e;
  }
}

TEST_F(Training, ValidationRestoresBestEpoch) {
  TrainConfig c;
  c.learning_rate = 5e-2;
  c.max_epochs = 60;
  c.validation_fraction = 0.25;
  c.patience = 5;
  const TrainResult r = train(arch, c, data.features, data.scalars, data.y);
  ASSERT_EQ(r.validation_trace.size(), r.loss_trace.size());
  const auto best = std::min_element(r.validation_trace.begin(), r.validation_trace.end());
  EXPECT_EQ(r.best_epoch, static_cast<int>(best - r.validation_trace.begin()) + 1);
  EXPECT_LE(static_cast<int>(r.loss_trace.size()) - r.best_epoch, 5);
}

TEST_F(Training, SpatialContextTrainsOnFilteredInputs) {
  const SpatialWeightMatrix w = line_weights(200);
  const SpatialContext ctx(w, 0.5);
  const Eigen::VectorXd y = apply_spatial_filter(w, 0.5, data.y);
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.max_epochs = 200;
  const TrainResult r = train(arch, c, data.features, data.scalars, y, &ctx);
  EXPECT_NEAR(loss(predict(r.params, data.features, data.scalars, &ctx), y), r.loss_trace.back(), 1e-10);
  EXPECT_LT(r.loss_trace.back(), 0.2);
}

TEST_F(Training, DivergenceCarriesTrace) {
  TrainConfig c;
  c.learning_rate = 1e300;
  c.max_epochs = 10;
  Eigen::VectorXd y = data.y * 1e200;
  try {
    train(arch, c, data.features, data.scalars, y);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTrainingDiverged);
    ASSERT_FALSE(e.trace().empty());
    EXPECT_FALSE(std::isfinite(e.trace().back()));
  }
}

TEST_F(Training, ConfigValidation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(train(arch, c, data.features, data.scalars, data.y), Error);
  c = TrainConfig{};
  c.validation_fraction = 0.6;
  EXPECT_THROW(train(arch, c, data.features, data.scalars, data.y), Error);
}

TEST(Parameters, TextRoundTripIsExact) {
  const NetworkArchitecture a = make_arch({4, 3}, 2, {5, 3}, Activation::kSigmoid);
  NetworkParameters p = init_parameters(a, 19);
  p.biases[1].setRandom();
  p.functional(0, 0) = 1.0 / 3.0;
  p.scalar(1, 1) = -5e-310;  // subnormal
  std::stringstream s;
  write_parameters(s, p);
  const NetworkParameters back = read_parameters(s);
  EXPECT_TRUE(back == p);
  EXPECT_EQ(back.architecture, a);
}

TEST(Parameters, RejectsBadHeader) {
  std::stringstream s("not-a-network\n");
  EXPECT_THROW(read_parameters(s), Error);
}
