#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sfdnn/basis.hpp"
#include "sfdnn/error.hpp"

using namespace sfdnn;

TEST(Grid, UniformEndpointsAndWeights) {
  const Grid g = Grid::uniform(5);
  EXPECT_EQ(g.size(), 5);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[4], 1.0);
  EXPECT_NEAR(g.trapezoid_weights().sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(g.trapezoid_weights()(0), 0.125);
  EXPECT_DOUBLE_EQ(g.trapezoid_weights()(2), 0.25);
}

TEST(Grid, RejectsBadPoints) {
  EXPECT_THROW(Grid({0.0}), Error);
  EXPECT_THROW(Grid({0.0, 0.5, 0.5, 1.0}), Error);
  EXPECT_THROW(Grid({0.1, 1.0}), Error);
  EXPECT_THROW(Grid({0.0, 0.9}), Error);
}

TEST(BSpline, CubicWithFourFunctionsIsBernstein) {
  const BSplineBasis b = make_bspline_basis(3, 4);
  EXPECT_TRUE(b.interior_knots().empty());
  for (double u : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    const Eigen::VectorXd v = b.evaluate(u);
    const double w = 1.0 - u;
    EXPECT_NEAR(v(0), w * w * w, 1e-14);
    EXPECT_NEAR(v(1), 3 * u * w * w, 1e-14);
    EXPECT_NEAR(v(2), 3 * u * u * w, 1e-14);
    EXPECT_NEAR(v(3), u * u * u, 1e-14);
  }
}

TEST(BSpline, LinearTwoFunctionsAreHats) {
  const BSplineBasis b = make_bspline_basis(1, 2);
  for (double u : {0.0, 0.3, 1.0}) {
    const Eigen::VectorXd v = b.evaluate(u);
    EXPECT_NEAR(v(0), 1.0 - u, 1e-15);
    EXPECT_NEAR(v(1), u, 1e-15);
  }
}

TEST(BSpline, CubicEightHasFourInteriorKnotsAndMatchesRecursion) {
  const BSplineBasis b = make_bspline_basis(3, 8);
  ASSERT_EQ(b.interior_knots().size(), 4u);
  const double expected[] = {0.2, 0.4, 0.6, 0.8};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(b.interior_knots()[static_cast<std::size_t>(k)], expected[k], 1e-15);
  const auto t = oracle::clamped_knots(3, 8);
  for (double u : {0.5, 0.31}) {
    const Eigen::VectorXd v = b.evaluate(u);
    for (int m = 0; m < 8; ++m) EXPECT_NEAR(v(m), oracle::bspline(t, m, 3, u), 1e-12) << "u=" << u << " m=" << m;
  }
}

TEST(BSpline, MatchesRecursionForManyShapes) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int degree = 1; degree <= 4; ++degree) {
    for (int m = degree + 1; m <= degree + 7; ++m) {
      const BSplineBasis b = make_bspline_basis(degree, m);
      const auto t = oracle::clamped_knots(degree, m);
      for (int k = 0; k < 25; ++k) {
        const double u = k == 0 ? 1.0 : (k == 1 ? 0.0 : unif(rng));
        const Eigen::VectorXd v = b.evaluate(u);
        for (int i = 0; i < m; ++i) ASSERT_NEAR(v(i), oracle::bspline(t, i, degree, u), 1e-12);
      }
    }
  }
}

TEST(BSpline, TooFewFunctionsIsArchitectureError) {
  try {
    make_bspline_basis(3, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArchitecture);
  }
}

TEST(BSpline, PartitionOfUnityAtRandomPoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto [degree, m] : {std::pair{3, 8}, {2, 5}, {1, 6}, {3, 12}}) {
    const BSplineBasis b = make_bspline_basis(degree, m);
    for (int k = 0; k < 1000; ++k) {
      const Eigen::VectorXd v = b.evaluate(unif(rng));
      ASSERT_LT(std::abs(v.sum() - 1.0), 1e-12);
      ASSERT_GE(v.minCoeff(), 0.0);
    }
  }
}

TEST(BSpline, LocalSupport) {
  const BSplineBasis b = make_bspline_basis(3, 9);
  const auto& t = b.knots();
  for (int m = 0; m < b.size(); ++m) {
    for (int k = 0; k <= 400; ++k) {
      const double u = k / 400.0;
      const bool inside = u >= t[static_cast<std::size_t>(m)] && u <= t[static_cast<std::size_t>(m + 4)];
      if (!inside) EXPECT_EQ(b.evaluate(u)(m), 0.0) << "m=" << m << " u=" << u;
    }
  }
}

TEST(EvaluateBasis, LinearOnThreePoints) {
  const Eigen::MatrixXd e = evaluate_basis(make_bspline_basis(1, 2), Grid::uniform(3));
  Eigen::MatrixXd expected(2, 3);
  expected << 1, 0.5, 0, 0, 0.5, 1;
  EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EvaluateBasis, ColumnsSumToOne) {
  for (int g : {2, 7, 101}) {
    const Eigen::MatrixXd e = evaluate_basis(make_bspline_basis(3, 7), Grid::uniform(g));
    EXPECT_LT((e.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(InnerProducts, ConstantAndZeroCurves) {
  const Grid grid = Grid::uniform(101);
  const BSplineBasis b = make_bspline_basis(3, 6);
  Eigen::MatrixXd curves(2, 101);
  curves.row(0).setOnes();
  curves.row(1).setZero();
  const Eigen::MatrixXd ip = functional_inner_products(b, curves, grid);
  EXPECT_NEAR(ip.row(0).sum(), 1.0, 1e-12);
  EXPECT_EQ(ip.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(InnerProducts, QuadraticMatchesFineTrapezoid) {
  // A 101-point trapezoid differs from the fine rule by its leading Euler-Maclaurin
  // term h^2/12 (f'(1) - f'(0)), f = psi_m u^2 (about 1e-4 here); once that known bias
  // is added to the oracle the two agree within 1e-6.
  const Grid grid = Grid::uniform(101);
  const BSplineBasis b = make_bspline_basis(3, 6);
  const auto t = oracle::clamped_knots(3, 6);
  Eigen::MatrixXd curve(1, 101);
  for (int g = 0; g < 101; ++g) curve(0, g) = grid[g] * grid[g];
  const Eigen::MatrixXd ip = functional_inner_products(b, curve, grid);
  const double h = 0.01;
  for (int m = 0; m < 6; ++m) {
    const auto f = [&](double u) { return oracle::bspline(t, m, 3, u) * u * u; };
    const double fine = oracle::trapezoid(f, 10001);
    const double step = 1e-6;
    const double d0 = (-3 * f(0.0) + 4 * f(step) - f(2 * step)) / (2 * step);
    const double d1 = (3 * f(1.0) - 4 * f(1.0 - step) + f(1.0 - 2 * step)) / (2 * step);
    EXPECT_NEAR(ip(0, m), fine + h * h / 12.0 * (d1 - d0), 1e-6) << m;
  }
}

TEST(InnerProducts, TrapezoidConvergesQuadratically) {
  const BSplineBasis b = make_bspline_basis(3, 6);
  const auto t = oracle::clamped_knots(3, 6);
  const auto f = [](double u) { return std::exp(u) * std::sin(3.0 * u); };
  std::vector<double> errors;
  for (int g : {26, 51, 101}) {
    const Grid grid = Grid::uniform(g);
    Eigen::MatrixXd curve(1, g);
    for (int k = 0; k < g; ++k) curve(0, k) = f(grid[k]);
    const Eigen::MatrixXd ip = functional_inner_products(b, curve, grid);
    double err = 0.0;
    for (int m = 0; m < 6; ++m) {
      const double fine = oracle::trapezoid([&](double u) { return oracle::bspline(t, m, 3, u) * f(u); }, 20001);
      err = std::max(err, std::abs(ip(0, m) - fine));
    }
    errors.push_back(err);
  }
  // Halving h should cut the error by about 4.
  EXPECT_GT(errors[0] / errors[1], 3.0);
  EXPECT_GT(errors[1] / errors[2], 3.0);
}

TEST(InnerProducts, WidthMismatchIsDimensionError) {
  try {
    functional_inner_products(make_bspline_basis(3, 5), Eigen::MatrixXd::Zero(2, 50), Grid::uniform(51));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}
