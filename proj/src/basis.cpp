#include "sfdnn/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfdnn/error.hpp"

namespace sfdnn {

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  require(points_.size() >= 2, ErrorKind::kDimension, "grid needs at least 2 points");
  require(points_.front() == 0.0 && points_.back() == 1.0, ErrorKind::kDimension,
          "grid must start at 0 and end at 1");
  for (std::size_t g = 1; g < points_.size(); ++g) {
    require(points_[g] > points_[g - 1], ErrorKind::kDimension, "grid must be strictly ascending");
  }
  const auto size = static_cast<Eigen::Index>(points_.size());
  weights_ = Eigen::VectorXd::Zero(size);
  for (Eigen::Index g = 0; g + 1 < size; ++g) {
    const double half = 0.5 * (points_[static_cast<std::size_t>(g + 1)] - points_[static_cast<std::size_t>(g)]);
    weights_(g) += half;
    weights_(g + 1) += half;
  }
}

Grid Grid::uniform(int size) {
  require(size >= 2, ErrorKind::kDimension, "grid needs at least 2 points");
  std::vector<double> points(static_cast<std::size_t>(size));
  for (int g = 0; g < size; ++g) points[static_cast<std::size_t>(g)] = static_cast<double>(g) / (size - 1);
  points.back() = 1.0;
  return Grid(std::move(points));
}

double integrate(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& values) {
  require(values.size() == grid.size(), ErrorKind::kDimension, "sample count does not match grid");
  return grid.trapezoid_weights().dot(values);
}

BSplineBasis::BSplineBasis(int degree, std::vector<double> interior_knots)
    : degree_(degree), interior_(std::move(interior_knots)) {
  require(degree_ >= 1, ErrorKind::kInvalidArchitecture, "B-spline degree must be at least 1");
  for (std::size_t k = 0; k < interior_.size(); ++k) {
    require(interior_[k] > 0.0 && interior_[k] < 1.0, ErrorKind::kInvalidArchitecture,
            "interior knots must lie strictly inside (0,1)");
    require(k == 0 || interior_[k] > interior_[k - 1], ErrorKind::kInvalidArchitecture,
            "interior knots must be strictly ascending");
  }
  knots_.assign(static_cast<std::size_t>(degree_ + 1), 0.0);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(degree_ + 1), 1.0);
}

// Index s of the knot span [t_s, t_{s+1}) containing u, with u = 1 mapped to the last
// nonempty span.
int BSplineBasis::span_index(double u) const {
  const int last = size() - 1;
  if (u >= 1.0) return last;
  const auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + last + 1, u);
  return static_cast<int>(it - knots_.begin()) - 1;
}

Eigen::VectorXd BSplineBasis::evaluate(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  const int s = span_index(u);
  // Cox-de Boor triangle for the degree+1 functions that are nonzero on span s.
  std::vector<double> local(static_cast<std::size_t>(degree_ + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree_ + 1));
  std::vector<double> right(static_cast<std::size_t>(degree_ + 1));
  local[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[static_cast<std::size_t>(j)] = u - knots_[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(s + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = local[static_cast<std::size_t>(r)] / denom;
      local[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    local[static_cast<std::size_t>(j)] = saved;
  }
  Eigen::VectorXd values = Eigen::VectorXd::Zero(size());
  for (int r = 0; r <= degree_; ++r) values(s - degree_ + r) = local[static_cast<std::size_t>(r)];
  return values;
}

BSplineBasis make_bspline_basis(int degree, int num_basis) {
  if (num_basis < degree + 1) {
    throw Error(ErrorKind::kInvalidArchitecture,
                "num_basis " + std::to_string(num_basis) + " is below degree + 1 = " +
                    std::to_string(degree + 1));
  }
  const int interior_count = num_basis - degree - 1;
  std::vector<double> interior(static_cast<std::size_t>(interior_count));
  for (int k = 0; k < interior_count; ++k) {
    interior[static_cast<std::size_t>(k)] = static_cast<double>(k + 1) / (interior_count + 1);
  }
  return BSplineBasis(degree, std::move(interior));
}

Eigen::MatrixXd evaluate_basis(const BSplineBasis& basis, const Grid& grid) {
  Eigen::MatrixXd values(basis.size(), grid.size());
  for (int g = 0; g < grid.size(); ++g) values.col(g) = basis.evaluate(grid[g]);
  return values;
}

Eigen::MatrixXd functional_inner_products(const BSplineBasis& basis,
                                          const Eigen::Ref<const Eigen::MatrixXd>& curves,
                                          const Grid& grid) {
  if (curves.cols() != grid.size()) {
    throw Error(ErrorKind::kDimension, "curves have " + std::to_string(curves.cols()) +
                                           " samples but grid has " + std::to_string(grid.size()));
  }
  // Weighted basis: column m holds psi_m(u_g) * w_g.
  const Eigen::MatrixXd weighted =
      (evaluate_basis(basis, grid) * grid.trapezoid_weights().asDiagonal()).transpose();
  return curves * weighted;
}

}  // namespace sfdnn
