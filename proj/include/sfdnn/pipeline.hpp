#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfdnn/basis.hpp"
#include "sfdnn/fdnn.hpp"
#include "sfdnn/fpca.hpp"
#include "sfdnn/metrics.hpp"
#include "sfdnn/spatial.hpp"

namespace sfdnn {

/// n sites: P functional predictors sampled on one grid, J scalar covariates, a response
/// and (for the spatial estimators) an n x n weight matrix.
struct RegressionDataset {
  std::vector<Eigen::MatrixXd> functional;  // P matrices, n x G
  Grid grid = Grid::uniform(2);
  Eigen::MatrixXd scalars;                  // n x J
  Eigen::VectorXd response;                 // n
  std::optional<SpatialWeightMatrix> weights;
  /// Site coordinates; only needed when a neighbour count is tuned.
  std::optional<std::vector<Coordinates>> coordinates;

  int size() const noexcept { return static_cast<int>(response.size()); }
  int num_functional() const noexcept { return static_cast<int>(functional.size()); }
  int num_scalars() const noexcept { return static_cast<int>(scalars.cols()); }

  /// Throws kDimension when parts disagree on n or the grid width.
  void validate() const;

  /// Rows `rows` in that order; the weight matrix is restricted to them and renormalized.
  RegressionDataset subset(std::span<const int> rows) const;
};

enum class ModelKind { kMlLinear, kFdnn, kSfdnn };

const char* to_string(ModelKind kind);
/// Accepts ml / ml_linear / fdnn / sfdnn.
ModelKind parse_model_kind(const std::string& name);

/// Column means and scales; constant columns keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& columns);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& columns) const;
};

struct FittedModel {
  ModelKind kind = ModelKind::kMlLinear;
  Grid grid = Grid::uniform(2);
  std::optional<double> rho_hat;
  bool rho_at_boundary = false;

  // ml_linear
  std::vector<FpcaModel> fpca;
  Eigen::VectorXd theta;  // intercept, FPC score coefficients, scalar coefficients
  double sigma2 = 0.0;

  // fdnn / sfdnn
  std::vector<BSplineBasis> bases;
  NetworkParameters network;
  Standardizer feature_scaling;
  Standardizer scalar_scaling;
  double response_mean = 0.0;
  double response_scale = 1.0;
  std::vector<double> loss_trace;

  MetricPair train_metrics;

  bool is_spatial() const noexcept { return kind != ModelKind::kFdnn; }
};

struct FitOptions {
  double variance_threshold = 0.95;
  /// Degree of the B-spline bases; lowered to M_p - 1 for small M_p.
  int basis_degree = 3;
  /// sfdnn only: skip Stage 1 and use this rho.
  std::optional<double> forced_rho;
  /// Prepared evaluator for data.weights; built on demand when null.
  const LogDeterminant* log_det = nullptr;
};

/// [1, FPC scores of every predictor, scalars], plus the per-predictor FPCA fits.
struct FpcaDesign {
  std::vector<FpcaModel> fpca;
  Eigen::MatrixXd design;
};
FpcaDesign build_fpca_design(const RegressionDataset& data, double variance_threshold);
Eigen::MatrixXd fpca_design_for(const std::vector<FpcaModel>& fpca, const RegressionDataset& data);

/// Concatenated basis inner products, n x sum(M_p).
Eigen::MatrixXd basis_features(const std::vector<BSplineBasis>& bases, const RegressionDataset& data);
std::vector<BSplineBasis> make_bases(const NetworkArchitecture& arch, int degree);

FittedModel fit_ml_baseline(const RegressionDataset& data, const FitOptions& options = {});
FittedModel fit_fdnn_model(const RegressionDataset& data, const NetworkArchitecture& arch,
                           const TrainConfig& config, const FitOptions& options = {});
FittedModel fit_sfdnn(const RegressionDataset& data, const NetworkArchitecture& arch, const TrainConfig& config,
                      const FitOptions& options = {});

/// Dispatches on kind; `arch`/`config` are ignored for ml_linear.
FittedModel fit_model(ModelKind kind, const RegressionDataset& data, const NetworkArchitecture& arch,
                      const TrainConfig& config, const FitOptions& options = {});

/// Spatial kinds filter with the training rho-hat and newdata's own weight matrix.
Eigen::VectorXd predict_model(const FittedModel& model, const RegressionDataset& newdata);

void write_model(std::ostream& out, const FittedModel& model);
FittedModel read_model(std::istream& in);

}  // namespace sfdnn
