#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

#include "sfdnn/basis.hpp"
#include "sfdnn/pipeline.hpp"

namespace sfdnn {

enum class ErrorDistribution { kGaussian, kT3, kExp1 };

const char* to_string(ErrorDistribution dist);
ErrorDistribution parse_error_distribution(const std::string& name);

/// One cell of the simulation design. The published grid is n_train in {100, 250, 500},
/// n_test = 1000, rho in {0.1, 0.5, 0.9}, G = 101; other values are accepted.
struct ScenarioConfig {
  int n_train = 500;
  int n_test = 1000;
  double rho = 0.5;
  ErrorDistribution error_dist = ErrorDistribution::kGaussian;
  std::uint64_t replication_seed = 1;
  int grid_size = 101;
  double beta0 = 0.0;
  /// Also filter the errors before the outer filter: Y = A^-1 (signal + A^-1 e).
  bool double_filter = false;
  /// Scales every error draw; 0 gives noise-free responses.
  double noise_scale = 1.0;

  /// True when every field lies on the published design grid.
  bool is_published_design() const;
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

inline constexpr std::array<double, 3> kTrueGamma = {1.25, -2.0, 2.15};
inline constexpr int kKarhunenLoeveTerms = 5;

struct TrueModel {
  double beta0 = 0.0;
  std::array<Eigen::VectorXd, 3> beta_curves;
  std::array<double, 3> gamma = kTrueGamma;
};

/// sin(2 pi u), cos(2 pi u), 2 sin(2 pi u) on the grid.
std::array<Eigen::VectorXd, 3> true_coefficient_curves(const Grid& grid);

/// sin(j pi u) - cos(j pi u).
double kl_basis_function(int j, double u);
/// Var(kappa_j) = 4 j^(-3/2).
double kl_score_variance(int j);

struct ScenarioData {
  RegressionDataset train;
  RegressionDataset test;
  TrueModel truth;
  Eigen::VectorXd train_signal;  // beta0 + sum_p int X_p beta_p + Z Gamma, before filtering
  Eigen::VectorXd test_signal;
};

ScenarioData generate_scenario_dataset(const ScenarioConfig& cfg);

}  // namespace sfdnn
