#pragma once

// Independent reference computations used by the test suites. None of these call the
// library; they are slow, direct transcriptions of the defining formulas.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

/// Textbook recursive B-spline N_{i,p}(u) on a knot vector; the last nonzero span is
/// closed at u = 1 so the clamped basis stays a partition of unity there.
inline double bspline(const std::vector<double>& t, int i, int p, double u) {
  if (p == 0) {
    const double a = t[static_cast<std::size_t>(i)];
    const double b = t[static_cast<std::size_t>(i + 1)];
    if (a <= u && u < b) return 1.0;
    if (u == t.back() && b == t.back() && a < b) return 1.0;
    return 0.0;
  }
  double left = 0.0;
  double right = 0.0;
  const double d1 = t[static_cast<std::size_t>(i + p)] - t[static_cast<std::size_t>(i)];
  const double d2 = t[static_cast<std::size_t>(i + p + 1)] - t[static_cast<std::size_t>(i + 1)];
  if (d1 > 0.0) left = (u - t[static_cast<std::size_t>(i)]) / d1 * bspline(t, i, p - 1, u);
  if (d2 > 0.0) right = (t[static_cast<std::size_t>(i + p + 1)] - u) / d2 * bspline(t, i + 1, p - 1, u);
  return left + right;
}

/// Clamped knot vector with equally spaced interior knots.
inline std::vector<double> clamped_knots(int degree, int num_basis) {
  std::vector<double> t;
  const int interior = num_basis - degree - 1;
  for (int k = 0; k <= degree; ++k) t.push_back(0.0);
  for (int k = 1; k <= interior; ++k) t.push_back(static_cast<double>(k) / (interior + 1));
  for (int k = 0; k <= degree; ++k) t.push_back(1.0);
  return t;
}

/// Composite trapezoid of f on `points` equally spaced nodes over [0,1].
template <typename F>
double trapezoid(F f, int points) {
  const double h = 1.0 / (points - 1);
  double s = 0.5 * (f(0.0) + f(1.0));
  for (int k = 1; k < points - 1; ++k) s += f(k * h);
  return s * h;
}

/// Determinant by cofactor expansion along the first row.
inline double cofactor_det(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index c2 = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, c2++) = a(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * cofactor_det(minor);
  }
  return det;
}

/// Haversine distance in km between (lat, lon) pairs given in degrees.
inline double haversine_km(double lat1, double lon1, double lat2, double lon2, double radius = 6371.0088) {
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * to_rad;
  const double dlon = (lon2 - lon1) * to_rad;
  const double a = std::pow(std::sin(dlat / 2), 2) +
                   std::cos(lat1 * to_rad) * std::cos(lat2 * to_rad) * std::pow(std::sin(dlon / 2), 2);
  return 2.0 * radius * std::asin(std::sqrt(a));
}

/// I_i = n (y_i - ybar) sum_j w_ij (y_j - ybar) / sum_j (y_j - ybar)^2, as nested loops.
inline std::vector<double> local_moran(const Eigen::MatrixXd& w, const std::vector<double>& y) {
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lag = 0.0;
    for (std::size_t j = 0; j < n; ++j) lag += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (y[j] - mean);
    out[i] = static_cast<double>(n) * (y[i] - mean) * lag / ss;
  }
  return out;
}

/// Eigenvalues of the covariance operator of X(u) = sum_j k_j v_j(u) with independent
/// k_j of variance s_j: the nonzero eigenvalues of S^{1/2} G S^{1/2}, where
/// G_jk = int v_j v_k du is computed by a fine trapezoid rule.
template <typename Basis>
Eigen::VectorXd karhunen_loeve_spectrum(Basis v, const std::vector<double>& variances, int fine_points) {
  const auto terms = static_cast<Eigen::Index>(variances.size());
  Eigen::MatrixXd gram(terms, terms);
  for (Eigen::Index j = 0; j < terms; ++j) {
    for (Eigen::Index k = 0; k < terms; ++k) {
      gram(j, k) = trapezoid([&](double u) { return v(static_cast<int>(j + 1), u) * v(static_cast<int>(k + 1), u); },
                             fine_points);
    }
  }
  Eigen::VectorXd s(terms);
  for (Eigen::Index j = 0; j < terms; ++j) s(j) = std::sqrt(variances[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd m = s.asDiagonal() * gram * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().reverse();
}

}  // namespace oracle
