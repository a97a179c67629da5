#pragma once

#include <Eigen/Dense>

#include "sfdnn/basis.hpp"

namespace sfdnn {

/// Functional principal components of one predictor, discretized on its grid.
struct FpcaModel {
  Eigen::VectorXd mean_curve;      // length G
  Eigen::VectorXd eigenvalues;     // descending, clipped at 0
  Eigen::MatrixXd eigenfunctions;  // K_max x G, quadrature-orthonormal rows
  int retained = 1;                // K_p
  double variance_threshold = 0.95;

  /// First `retained` eigenfunctions.
  Eigen::MatrixXd retained_eigenfunctions() const { return eigenfunctions.topRows(retained); }
};

/// Smallest K with cumulative eigenvalue share >= threshold; at least 1.
int select_component_count(const Eigen::VectorXd& eigenvalues, double variance_threshold);

FpcaModel fit_fpca(const Eigen::Ref<const Eigen::MatrixXd>& curves, const Grid& grid,
                   double variance_threshold = 0.95);

/// n x K_p matrix of trapezoid scores against the retained eigenfunctions.
Eigen::MatrixXd project_scores(const FpcaModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& curves, const Grid& grid);

Eigen::MatrixXd reconstruct(const FpcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& scores);

}  // namespace sfdnn
