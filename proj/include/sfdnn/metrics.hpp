#pragma once

#include <Eigen/Dense>

namespace sfdnn {

enum class MetricRole { kTrain, kTest };

/// MSE (train) or MSPE (test) together with the matching R^2.
struct MetricPair {
  double error = 0.0;
  double r2 = 0.0;
};

/// Mean squared residual and 1 - SSR/SST around the sample's own mean.
/// Throws kDimension on length mismatch or n < 2, kDegenerateVariance when y is constant.
MetricPair compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& yhat, MetricRole role);

struct TaylorStats {
  double correlation = 0.0;
  double sd_observed = 0.0;
  double sd_predicted = 0.0;
  double centered_rmsd = 0.0;
};

/// Population (divisor n) standard deviations, so that
/// crmsd^2 = sd_obs^2 + sd_pred^2 - 2 sd_obs sd_pred corr holds exactly.
TaylorStats taylor_stats(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& yhat);

}  // namespace sfdnn
