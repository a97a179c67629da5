#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <complex>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace sfdnn {

/// Above this size weight matrices are factorized in sparse form.
inline constexpr int kDenseLimit = 3000;
/// Largest size for which the admissible rho interval comes from the spectrum of W.
inline constexpr int kSpectrumLimit = 2000;
inline constexpr double kEarthRadiusKm = 6371.0088;

/// n x n nonnegative weights with zero diagonal.
class SpatialWeightMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Validates the invariants (square, zero diagonal, nonnegative, row sums when
  /// flagged row-normalized); throws kInvalidSize / kData otherwise.
  SpatialWeightMatrix(Sparse weights, bool row_normalized);

  static SpatialWeightMatrix from_dense(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                        bool row_normalized);

  int size() const noexcept { return static_cast<int>(weights_.rows()); }
  bool row_normalized() const noexcept { return row_normalized_; }
  const Sparse& sparse() const noexcept { return weights_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(weights_); }

  /// Copy with every nonzero row scaled to sum to 1; all-zero rows stay zero.
  SpatialWeightMatrix normalized() const;

  /// Rows/columns `indices` (in that order); renormalizes when this matrix is row-normalized.
  SpatialWeightMatrix subset(std::span<const int> indices) const;

  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights_ * x; }

  /// Coordinate-list text: header `n <n> row_normalized <0|1>`, then `i j w_ij` lines.
  void write(std::ostream& out) const;
  static SpatialWeightMatrix read(std::istream& in);

  bool operator==(const SpatialWeightMatrix& other) const;

 private:
  Sparse weights_;
  bool row_normalized_;
};

struct Coordinates {
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]
};

/// Haversine distance in kilometres.
double great_circle_km(const Coordinates& a, const Coordinates& b);

/// Row-normalized w_ij = 1/(1+|i-j|), i != j.
SpatialWeightMatrix build_inverse_distance_weights(int n);

/// Adaptive bi-square kernel over the h nearest neighbours (ties at the h-th distance
/// included), row-normalized. A row whose raw weights are all zero falls back to
/// uniform weights over its neighbours.
SpatialWeightMatrix build_knn_bisquare_weights(std::span<const Coordinates> coords, int h);

Eigen::VectorXd local_morans_i(const SpatialWeightMatrix& weights,
                               const Eigen::Ref<const Eigen::VectorXd>& y);

/// Open interval of rho for which I - rho W stays nonsingular with positive determinant.
struct RhoInterval {
  double lower = -1.0;
  double upper = 1.0;
  bool contains(double rho) const { return rho > lower && rho < upper; }
};

/// (1/lambda_min, 1/lambda_max) of the real spectrum intersected with (-1,1); for
/// n > kSpectrumLimit returns (-1+1e-6, 1-1e-6).
RhoInterval admissible_interval(const SpatialWeightMatrix& weights);

/// LU factorization of I - rho W, reused for filtering, transpose solves and log|.|.
class SpatialFilter {
 public:
  /// Throws kOutsideAdmissibleRegion when I - rho W is singular or det <= 0.
  SpatialFilter(const SpatialWeightMatrix& weights, double rho);
  ~SpatialFilter();
  SpatialFilter(SpatialFilter&&) noexcept;
  SpatialFilter& operator=(SpatialFilter&&) noexcept;

  double rho() const noexcept { return rho_; }
  int size() const noexcept { return n_; }
  double log_det() const noexcept { return log_det_; }

  /// X with (I - rho W) X = B.
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;
  /// X with (I - rho W)^T X = B.
  Eigen::MatrixXd solve_transpose(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

 private:
  struct Factor;
  int n_ = 0;
  double rho_ = 0.0;
  double log_det_ = 0.0;
  std::unique_ptr<Factor> factor_;
};

/// ln det(I - rho W) by pivoted LU; throws kOutsideAdmissibleRegion when det <= 0.
double log_det_filter(const SpatialWeightMatrix& weights, double rho);

/// Solves (I - rho W) X = B without forming the inverse.
Eigen::MatrixXd apply_spatial_filter(const SpatialWeightMatrix& weights, double rho,
                                     const Eigen::Ref<const Eigen::MatrixXd>& rhs);

/// Evaluates ln det(I - rho W) repeatedly. Uses the eigenvalues of W when n is small
/// enough (computed once), otherwise one LU per call.
class LogDeterminant {
 public:
  explicit LogDeterminant(const SpatialWeightMatrix& weights);

  double operator()(double rho) const;
  /// d/drho of ln|I - rho W|; needs the spectrum.
  double derivative(double rho) const;
  const RhoInterval& interval() const noexcept { return interval_; }
  bool uses_spectrum() const noexcept { return !eigenvalues_.empty(); }

 private:
  SpatialWeightMatrix weights_;
  std::vector<std::complex<double>> eigenvalues_;
  RhoInterval interval_;
};

struct RhoEstimate {
  double rho_hat = 0.0;
  Eigen::VectorXd theta_hat;
  double sigma2_hat = 0.0;
  double loglik = 0.0;
  RhoInterval admissible_interval;
  bool at_boundary = false;
};

/// Concentrated log-likelihood ln|I - rho W| - (n/2) ln sigma2(rho), without constants.
class ConcentratedLikelihood {
 public:
  ConcentratedLikelihood(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const SpatialWeightMatrix& weights, const LogDeterminant& log_det);

  double operator()(double rho) const;
  double derivative(double rho) const;
  double sigma2(double rho) const;
  Eigen::VectorXd theta(double rho) const;

 private:
  const LogDeterminant* log_det_;
  Eigen::VectorXd resid_y_;    // y residual after projecting on the design
  Eigen::VectorXd resid_wy_;   // Wy residual
  Eigen::VectorXd theta_y_;
  Eigen::VectorXd theta_wy_;
  double n_;
};

/// Maximum-likelihood rho for y = rho W y + Xc theta + e. Xc must have full column rank
/// and an all-ones first column.
RhoEstimate estimate_rho_ml(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const SpatialWeightMatrix& weights);

/// Same, reusing a prepared log-determinant evaluator for `weights`.
RhoEstimate estimate_rho_ml(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const SpatialWeightMatrix& weights, const LogDeterminant& log_det);

}  // namespace sfdnn
