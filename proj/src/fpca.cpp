#include "sfdnn/fpca.hpp"

#include <algorithm>
#include <string>

#include "sfdnn/error.hpp"

namespace sfdnn {

int select_component_count(const Eigen::VectorXd& eigenvalues, double variance_threshold) {
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) return 1;
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    cumulative += eigenvalues(k);
    // Relative slack absorbs the rounding in a cumulative sum that should hit 1 exactly.
    if (cumulative / total >= variance_threshold - 1e-12) return static_cast<int>(k + 1);
  }
  return static_cast<int>(eigenvalues.size());
}

FpcaModel fit_fpca(const Eigen::Ref<const Eigen::MatrixXd>& curves, const Grid& grid,
                   double variance_threshold) {
  const Eigen::Index n = curves.rows();
  require(n >= 2, ErrorKind::kInsufficientData, "FPCA needs at least 2 curves");
  require(variance_threshold > 0.0 && variance_threshold <= 1.0, ErrorKind::kConfig,
          "variance threshold must lie in (0,1]");
  require(curves.cols() == grid.size(), ErrorKind::kDimension, "curve width does not match grid");

  FpcaModel model;
  model.variance_threshold = variance_threshold;
  model.mean_curve = curves.colwise().mean().transpose();
  const Eigen::MatrixXd centered = curves.rowwise() - model.mean_curve.transpose();
  const Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  // Symmetric form D^1/2 C D^1/2 gives quadrature-orthonormal eigenfunctions D^-1/2 v.
  const Eigen::VectorXd sqrt_w = grid.trapezoid_weights().cwiseSqrt();
  const Eigen::MatrixXd operator_matrix = sqrt_w.asDiagonal() * covariance * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(operator_matrix);
  require(solver.info() == Eigen::Success, ErrorKind::kNumericOverflow,
          "covariance eigen-decomposition failed");

  const Eigen::Index grid_size = grid.size();
  const Eigen::Index k_max = std::min<Eigen::Index>(grid_size, n - 1);
  model.eigenvalues.resize(k_max);
  model.eigenfunctions.resize(k_max, grid_size);
  const Eigen::VectorXd& w = grid.trapezoid_weights();
  for (Eigen::Index k = 0; k < k_max; ++k) {
    const Eigen::Index source = grid_size - 1 - k;  // solver sorts ascending
    model.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(source));
    Eigen::VectorXd phi = solver.eigenvectors().col(source).cwiseQuotient(sqrt_w);
    const double area = w.dot(phi);
    double sign_key = area;
    if (std::abs(area) < 1e-12) {
      Eigen::Index largest = 0;
      phi.cwiseAbs().maxCoeff(&largest);
      sign_key = phi(largest);
    }
    if (sign_key < 0.0) phi = -phi;
    model.eigenfunctions.row(k) = phi.transpose();
  }
  model.retained = select_component_count(model.eigenvalues, variance_threshold);
  return model;
}

Eigen::MatrixXd project_scores(const FpcaModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& curves, const Grid& grid) {
  if (curves.cols() != grid.size() || model.mean_curve.size() != grid.size()) {
    throw Error(ErrorKind::kDimension, "curves have " + std::to_string(curves.cols()) +
                                           " samples, grid " + std::to_string(grid.size()) +
                                           ", model " + std::to_string(model.mean_curve.size()));
  }
  const Eigen::MatrixXd centered = curves.rowwise() - model.mean_curve.transpose();
  return centered * grid.trapezoid_weights().asDiagonal() * model.retained_eigenfunctions().transpose();
}

Eigen::MatrixXd reconstruct(const FpcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& scores) {
  if (scores.cols() != model.retained) {
    throw Error(ErrorKind::kDimension, "score width " + std::to_string(scores.cols()) +
                                           " does not match retained count " +
                                           std::to_string(model.retained));
  }
  Eigen::MatrixXd curves = scores * model.retained_eigenfunctions();
  curves.rowwise() += model.mean_curve.transpose();
  return curves;
}

}  // namespace sfdnn
