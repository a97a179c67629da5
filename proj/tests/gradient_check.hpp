#pragma once

// Central finite differences of the mean squared loss, entry by entry.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfdnn/fdnn.hpp"

namespace gradcheck {

inline std::vector<double*> entries(sfdnn::NetworkParameters& p) {
  std::vector<double*> out;
  p.for_each_tensor([&](auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) out.push_back(t.data() + k);
  });
  return out;
}

struct Report {
  double max_relative_error = 0.0;
  long long checked = 0;
};

/// Relative error |g - fd| / max(|g|, |fd|, floor) over every parameter.
inline Report compare(const sfdnn::NetworkParameters& params, const Eigen::MatrixXd& features,
                      const Eigen::MatrixXd& scalars, const Eigen::VectorXd& y,
                      const sfdnn::SpatialContext* context, double step = 1e-5, double floor = 1e-6) {
  sfdnn::NetworkParameters analytic = sfdnn::gradients(params, features, scalars, y, context);
  sfdnn::NetworkParameters probe = params;
  const auto g = entries(analytic);
  const auto x = entries(probe);
  Report report;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = *x[k];
    *x[k] = saved + step;
    const double up = sfdnn::loss(sfdnn::predict(probe, features, scalars, context), y);
    *x[k] = saved - step;
    const double down = sfdnn::loss(sfdnn::predict(probe, features, scalars, context), y);
    *x[k] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(*g[k] - fd) / std::max({std::abs(*g[k]), std::abs(fd), floor});
    report.max_relative_error = std::max(report.max_relative_error, rel);
    ++report.checked;
  }
  return report;
}

}  // namespace gradcheck
