#include "sfdnn/metrics.hpp"

#include <cmath>
#include <string>

#include "sfdnn/error.hpp"

namespace sfdnn {

namespace {

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& yhat) {
  if (y.size() != yhat.size()) {
    throw Error(ErrorKind::kDimension, "observed (" + std::to_string(y.size()) + ") and predicted (" +
                                           std::to_string(yhat.size()) + ") lengths differ");
  }
  require(y.size() >= 2, ErrorKind::kDimension, "metrics need at least 2 observations");
}

}  // namespace

MetricPair compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& yhat, MetricRole /*role*/) {
  // Train and test use the same formulas; the role only selects which sample's mean
  // enters R^2, and that is always the sample passed in.
  check_pair(y, yhat);
  const double n = static_cast<double>(y.size());
  const double ssr = (y - yhat).squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  require(sst > 0.0, ErrorKind::kDegenerateVariance, "R^2 is undefined for a constant response");
  return {ssr / n, 1.0 - ssr / sst};
}

TaylorStats taylor_stats(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& yhat) {
  check_pair(y, yhat);
  const double n = static_cast<double>(y.size());
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const Eigen::ArrayXd dp = yhat.array() - yhat.mean();
  const double var_y = dy.square().sum() / n;
  const double var_p = dp.square().sum() / n;
  require(var_y > 0.0 && var_p > 0.0, ErrorKind::kDegenerateVariance,
          "Taylor statistics need nonzero variance in both series");
  TaylorStats stats;
  stats.sd_observed = std::sqrt(var_y);
  stats.sd_predicted = std::sqrt(var_p);
  stats.correlation = (dy * dp).sum() / n / (stats.sd_observed * stats.sd_predicted);
  stats.centered_rmsd = std::sqrt((dy - dp).square().sum() / n);
  return stats;
}

}  // namespace sfdnn
