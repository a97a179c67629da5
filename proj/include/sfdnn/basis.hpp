#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace sfdnn {

/// Observation grid on [0,1]: strictly ascending, first point 0, last point 1.
class Grid {
 public:
  explicit Grid(std::vector<double> points);

  /// G equally spaced points 0, 1/(G-1), ..., 1.
  static Grid uniform(int size);

  int size() const noexcept { return static_cast<int>(points_.size()); }
  double operator[](int g) const { return points_[static_cast<std::size_t>(g)]; }
  std::span<const double> points() const noexcept { return points_; }

  /// Composite-trapezoid weights: integral of f ~= sum_g w_g f(u_g).
  const Eigen::VectorXd& trapezoid_weights() const noexcept { return weights_; }

  bool operator==(const Grid& other) const { return points_ == other.points_; }

 private:
  std::vector<double> points_;
  Eigen::VectorXd weights_;
};

/// Trapezoid integral of samples taken on the grid.
double integrate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& values);

/// Clamped B-spline basis on [0,1] with equally spaced interior knots.
class BSplineBasis {
 public:
  BSplineBasis(int degree, std::vector<double> interior_knots);

  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(interior_.size()) + degree_ + 1; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  /// Full clamped knot vector (degree+1 copies of each end point).
  const std::vector<double>& knots() const noexcept { return knots_; }

  /// All basis values at u; u is clamped to [0,1].
  Eigen::VectorXd evaluate(double u) const;

  bool operator==(const BSplineBasis& other) const {
    return degree_ == other.degree_ && interior_ == other.interior_;
  }

 private:
  int span_index(double u) const;

  int degree_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// Basis of `num_basis` functions of the given degree; throws kInvalidArchitecture
/// when num_basis < degree + 1.
BSplineBasis make_bspline_basis(int degree, int num_basis);

/// M x G matrix with entry (m, g) = psi_m(u_g).
Eigen::MatrixXd evaluate_basis(const BSplineBasis& basis, const Grid& grid);

/// n x M matrix of trapezoid approximations to the integral of psi_m times curve i.
Eigen::MatrixXd functional_inner_products(const BSplineBasis& basis,
                                          const Eigen::Ref<const Eigen::MatrixXd>& curves,
                                          const Grid& grid);

}  // namespace sfdnn
