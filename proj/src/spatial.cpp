#include "sfdnn/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "sfdnn/error.hpp"

namespace sfdnn {

namespace {

constexpr double kRowSumTolerance = 1e-10;

std::vector<double> row_sums(const SpatialWeightMatrix::Sparse& w) {
  std::vector<double> sums(static_cast<std::size_t>(w.rows()), 0.0);
  for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
    for (SpatialWeightMatrix::Sparse::InnerIterator it(w, i); it; ++it) {
      sums[static_cast<std::size_t>(i)] += it.value();
    }
  }
  return sums;
}

SpatialWeightMatrix::Sparse from_triplets(int n, const std::vector<Eigen::Triplet<double>>& triplets) {
  SpatialWeightMatrix::Sparse w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end());
  w.prune(0.0);
  w.makeCompressed();
  return w;
}

}  // namespace

SpatialWeightMatrix::SpatialWeightMatrix(Sparse weights, bool row_normalized)
    : weights_(std::move(weights)), row_normalized_(row_normalized) {
  require(weights_.rows() == weights_.cols(), ErrorKind::kInvalidSize, "weight matrix must be square");
  weights_.prune(0.0);
  weights_.makeCompressed();
  for (Eigen::Index i = 0; i < weights_.outerSize(); ++i) {
    for (Sparse::InnerIterator it(weights_, i); it; ++it) {
      require(std::isfinite(it.value()) && it.value() >= 0.0, ErrorKind::kData,
              "weights must be finite and nonnegative (row " + std::to_string(i) + ")");
      require(it.col() != i, ErrorKind::kData,
              "weight matrix diagonal must be zero (row " + std::to_string(i) + ")");
    }
  }
  if (row_normalized_) {
    const auto sums = row_sums(weights_);
    for (std::size_t i = 0; i < sums.size(); ++i) {
      require(sums[i] == 0.0 || std::abs(sums[i] - 1.0) < kRowSumTolerance, ErrorKind::kData,
              "row " + std::to_string(i) + " of a row-normalized matrix sums to " +
                  std::to_string(sums[i]));
    }
  }
}

SpatialWeightMatrix SpatialWeightMatrix::from_dense(const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                                    bool row_normalized) {
  require(weights.rows() == weights.cols(), ErrorKind::kInvalidSize, "weight matrix must be square");
  Sparse w = weights.sparseView();
  return SpatialWeightMatrix(std::move(w), row_normalized);
}

SpatialWeightMatrix SpatialWeightMatrix::normalized() const {
  Sparse w = weights_;
  const auto sums = row_sums(w);
  for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
    const double s = sums[static_cast<std::size_t>(i)];
    if (s == 0.0) continue;
    for (Sparse::InnerIterator it(w, i); it; ++it) it.valueRef() /= s;
  }
  return SpatialWeightMatrix(std::move(w), true);
}

SpatialWeightMatrix SpatialWeightMatrix::subset(std::span<const int> indices) const {
  const int n = size();
  std::vector<int> position(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int original = indices[k];
    require(original >= 0 && original < n, ErrorKind::kDimension, "subset index out of range");
    require(position[static_cast<std::size_t>(original)] < 0, ErrorKind::kDimension,
            "subset indices must be distinct");
    position[static_cast<std::size_t>(original)] = static_cast<int>(k);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    for (Sparse::InnerIterator it(weights_, indices[k]); it; ++it) {
      const int column = position[static_cast<std::size_t>(it.col())];
      if (column >= 0) triplets.emplace_back(static_cast<int>(k), column, it.value());
    }
  }
  SpatialWeightMatrix sub(from_triplets(static_cast<int>(indices.size()), triplets), false);
  return row_normalized_ ? sub.normalized() : sub;
}

void SpatialWeightMatrix::write(std::ostream& out) const {
  out << "n " << size() << " row_normalized " << (row_normalized_ ? 1 : 0) << '\n';
  char buffer[64];
  for (Eigen::Index i = 0; i < weights_.outerSize(); ++i) {
    for (Sparse::InnerIterator it(weights_, i); it; ++it) {
      std::snprintf(buffer, sizeof buffer, "%.17g", it.value());
      out << i << ' ' << it.col() << ' ' << buffer << '\n';
    }
  }
}

SpatialWeightMatrix SpatialWeightMatrix::read(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kData, "weight file is empty");
  std::istringstream header(line);
  std::string n_tag, flag_tag;
  long long n = -1;
  int flag = -1;
  header >> n_tag >> n >> flag_tag >> flag;
  if (!header || n_tag != "n" || flag_tag != "row_normalized" || n < 1 || (flag != 0 && flag != 1)) {
    throw Error(ErrorKind::kData, "malformed weight header", "line 1: " + line);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream row(line);
    long long i = -1, j = -1;
    double w = 0.0;
    row >> i >> j >> w;
    std::string trailing;
    if (!row || (row >> trailing) || i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(ErrorKind::kData, "malformed weight entry",
                  "line " + std::to_string(line_number) + ": " + line);
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
  }
  return SpatialWeightMatrix(from_triplets(static_cast<int>(n), triplets), flag == 1);
}

bool SpatialWeightMatrix::operator==(const SpatialWeightMatrix& other) const {
  if (size() != other.size() || row_normalized_ != other.row_normalized_) return false;
  if (weights_.nonZeros() != other.weights_.nonZeros()) return false;
  return (weights_ - other.weights_).norm() == 0.0;
}

double great_circle_km(const Coordinates& a, const Coordinates& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double lat1 = a.latitude * kDeg;
  const double lat2 = b.latitude * kDeg;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude - a.longitude) * kDeg;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = std::min(1.0, s * s + std::cos(lat1) * std::cos(lat2) * t * t);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

SpatialWeightMatrix build_inverse_distance_weights(int n) {
  if (n < 2) throw Error(ErrorKind::kInvalidSize, "inverse distance weights need n >= 2, got " + std::to_string(n));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) total += 1.0 / (1.0 + std::abs(i - j));
    }
    for (int j = 0; j < n; ++j) {
      if (j != i) triplets.emplace_back(i, j, (1.0 / (1.0 + std::abs(i - j))) / total);
    }
  }
  return SpatialWeightMatrix(from_triplets(n, triplets), true);
}

SpatialWeightMatrix build_knn_bisquare_weights(std::span<const Coordinates> coords, int h) {
  const int n = static_cast<int>(coords.size());
  require(h >= 1, ErrorKind::kInvalidSize, "neighbour count h must be at least 1");
  if (n < h + 1) {
    throw Error(ErrorKind::kInvalidSize, "need at least h+1 = " + std::to_string(h + 1) +
                                             " sites, got " + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    const auto& c = coords[static_cast<std::size_t>(i)];
    require(c.latitude >= -90.0 && c.latitude <= 90.0 && c.longitude >= -180.0 && c.longitude <= 180.0,
            ErrorKind::kData, "coordinates out of range at site " + std::to_string(i));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::pair<double, int>> distances(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) distances[k++] = {great_circle_km(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)]), j};
    }
    std::sort(distances.begin(), distances.end());
    const double bandwidth = distances[static_cast<std::size_t>(h - 1)].first;
    if (!(bandwidth > 0.0)) {
      throw Error(ErrorKind::kDegenerateBandwidth,
                  "site " + std::to_string(i) + " has " + std::to_string(h) +
                      " or more neighbours at distance 0 (duplicate coordinates)");
    }
    std::size_t count = static_cast<std::size_t>(h);
    while (count < distances.size() && distances[count].first <= bandwidth) ++count;

    double total = 0.0;
    std::vector<double> raw(count);
    for (std::size_t m = 0; m < count; ++m) {
      const double ratio = distances[m].first / bandwidth;
      const double kernel = ratio < 1.0 ? (1.0 - ratio * ratio) * (1.0 - ratio * ratio) : 0.0;
      raw[m] = kernel;
      total += kernel;
    }
    for (std::size_t m = 0; m < count; ++m) {
      const double w = total > 0.0 ? raw[m] / total : 1.0 / static_cast<double>(count);
      if (w > 0.0) triplets.emplace_back(i, distances[m].second, w);
    }
  }
  return SpatialWeightMatrix(from_triplets(n, triplets), true);
}

Eigen::VectorXd local_morans_i(const SpatialWeightMatrix& weights,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(y.size() == weights.size(), ErrorKind::kDimension, "response length does not match weights");
  const Eigen::VectorXd deviation = y.array() - y.mean();
  const double sum_squares = deviation.squaredNorm();
  // Relative test: y constant up to rounding.
  if (!(sum_squares > 1e-28 * std::max(1.0, y.squaredNorm()))) {
    throw Error(ErrorKind::kDegenerateVariance, "local Moran's I needs non-constant y");
  }
  const Eigen::VectorXd lagged = weights.sparse() * deviation;
  return static_cast<double>(y.size()) * deviation.cwiseProduct(lagged) / sum_squares;
}

namespace {

std::vector<std::complex<double>> spectrum(const SpatialWeightMatrix& weights) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(weights.dense(), false);
  require(solver.info() == Eigen::Success, ErrorKind::kNumericOverflow,
          "eigenvalues of the weight matrix did not converge");
  const auto& values = solver.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

RhoInterval interval_from_spectrum(const std::vector<std::complex<double>>& eigenvalues) {
  double scale = 0.0;
  for (const auto& v : eigenvalues) scale = std::max(scale, std::abs(v));
  double lowest = 0.0, highest = 0.0;
  for (const auto& v : eigenvalues) {
    if (std::abs(v.imag()) > 1e-9 * std::max(1.0, scale)) continue;
    lowest = std::min(lowest, v.real());
    highest = std::max(highest, v.real());
  }
  RhoInterval interval;
  if (lowest < 0.0) interval.lower = std::max(-1.0, 1.0 / lowest);
  if (highest > 0.0) interval.upper = std::min(1.0, 1.0 / highest);
  return interval;
}

}  // namespace

RhoInterval admissible_interval(const SpatialWeightMatrix& weights) {
  if (weights.size() > kSpectrumLimit) return {-1.0 + 1e-6, 1.0 - 1e-6};
  return interval_from_spectrum(spectrum(weights));
}

struct SpatialFilter::Factor {
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> dense;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse;
};

SpatialFilter::SpatialFilter(const SpatialWeightMatrix& weights, double rho)
    : n_(weights.size()), rho_(rho), factor_(std::make_unique<Factor>()) {
  require(std::isfinite(rho), ErrorKind::kOutsideAdmissibleRegion, "rho must be finite");
  const auto singular = [rho] {
    return Error(ErrorKind::kOutsideAdmissibleRegion,
                 "I - rho W is singular or has nonpositive determinant at rho = " + std::to_string(rho));
  };
  if (n_ <= kDenseLimit) {
    Eigen::MatrixXd system = -rho * weights.dense();
    system.diagonal().array() += 1.0;
    auto& lu = factor_->dense.emplace(system);
    const auto& upper = lu.matrixLU();
    double sign = lu.permutationP().determinant();
    double log_abs = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double pivot = upper(i, i);
      if (pivot == 0.0) throw singular();
      if (pivot < 0.0) sign = -sign;
      log_abs += std::log(std::abs(pivot));
    }
    if (sign <= 0.0 || lu.rcond() < 1e-14) throw singular();
    log_det_ = log_abs;
  } else {
    Eigen::SparseMatrix<double> system(n_, n_);
    system.setIdentity();
    system -= rho * Eigen::SparseMatrix<double>(weights.sparse());
    system.makeCompressed();
    factor_->sparse = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    factor_->sparse->compute(system);
    if (factor_->sparse->info() != Eigen::Success || factor_->sparse->signDeterminant() <= 0.0) {
      throw singular();
    }
    log_det_ = factor_->sparse->logAbsDeterminant();
  }
}

SpatialFilter::~SpatialFilter() = default;
SpatialFilter::SpatialFilter(SpatialFilter&&) noexcept = default;
SpatialFilter& SpatialFilter::operator=(SpatialFilter&&) noexcept = default;

Eigen::MatrixXd SpatialFilter::solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  require(rhs.rows() == n_, ErrorKind::kDimension, "filter right-hand side has wrong row count");
  if (rho_ == 0.0) return rhs;
  if (factor_->dense) return factor_->dense->solve(rhs);
  return factor_->sparse->solve(Eigen::MatrixXd(rhs));
}

Eigen::MatrixXd SpatialFilter::solve_transpose(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  require(rhs.rows() == n_, ErrorKind::kDimension, "filter right-hand side has wrong row count");
  if (rho_ == 0.0) return rhs;
  if (factor_->dense) return factor_->dense->transpose().solve(rhs);
  return factor_->sparse->transpose().solve(Eigen::MatrixXd(rhs));
}

double log_det_filter(const SpatialWeightMatrix& weights, double rho) {
  if (rho == 0.0) return 0.0;
  return SpatialFilter(weights, rho).log_det();
}

Eigen::MatrixXd apply_spatial_filter(const SpatialWeightMatrix& weights, double rho,
                                     const Eigen::Ref<const Eigen::MatrixXd>& rhs) {
  require(rhs.rows() == weights.size(), ErrorKind::kDimension, "filter right-hand side has wrong row count");
  if (rho == 0.0) return rhs;
  return SpatialFilter(weights, rho).solve(rhs);
}

LogDeterminant::LogDeterminant(const SpatialWeightMatrix& weights) : weights_(weights) {
  if (weights.size() <= kSpectrumLimit) {
    eigenvalues_ = spectrum(weights);
    interval_ = interval_from_spectrum(eigenvalues_);
  } else {
    interval_ = {-1.0 + 1e-6, 1.0 - 1e-6};
  }
}

double LogDeterminant::operator()(double rho) const {
  if (eigenvalues_.empty()) return log_det_filter(weights_, rho);
  // Complex eigenvalues come in conjugate pairs, so the sum of log|1 - rho lambda| is
  // ln|det|; the determinant is positive only while every real factor is.
  double total = 0.0;
  for (const auto& v : eigenvalues_) {
    const std::complex<double> factor = 1.0 - rho * v;
    if (std::abs(factor.imag()) <= 1e-12 && factor.real() <= 0.0) {
      throw Error(ErrorKind::kOutsideAdmissibleRegion,
                  "rho = " + std::to_string(rho) + " leaves the admissible region");
    }
    total += std::log(std::abs(factor));
  }
  return total;
}

double LogDeterminant::derivative(double rho) const {
  require(!eigenvalues_.empty(), ErrorKind::kNumericOverflow, "log-determinant derivative needs the spectrum");
  double total = 0.0;
  for (const auto& v : eigenvalues_) total -= (v / (1.0 - rho * v)).real();
  return total;
}

ConcentratedLikelihood::ConcentratedLikelihood(const Eigen::Ref<const Eigen::VectorXd>& y,
                                               const Eigen::Ref<const Eigen::MatrixXd>& design,
                                               const SpatialWeightMatrix& weights,
                                               const LogDeterminant& log_det)
    : log_det_(&log_det), n_(static_cast<double>(y.size())) {
  const Eigen::Index n = y.size();
  require(design.rows() == n && weights.size() == n, ErrorKind::kDimension,
          "response, design and weights disagree on n");
  require(design.cols() >= 1 && n > design.cols(), ErrorKind::kDesignRank,
          "design needs fewer columns than rows");
  require((design.col(0).array() - 1.0).abs().maxCoeff() < 1e-12, ErrorKind::kDesignRank,
          "first design column must be the all-ones intercept");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorKind::kDesignRank, "design matrix has rank " + std::to_string(qr.rank()) +
                                            " < " + std::to_string(design.cols()) + " columns");
  }
  const Eigen::VectorXd lagged = weights.multiply(y);
  theta_y_ = qr.solve(y);
  theta_wy_ = qr.solve(lagged);
  resid_y_ = y - design * theta_y_;
  resid_wy_ = lagged - design * theta_wy_;
}

double ConcentratedLikelihood::sigma2(double rho) const {
  return (resid_y_ - rho * resid_wy_).squaredNorm() / n_;
}

double ConcentratedLikelihood::derivative(double rho) const {
  const Eigen::VectorXd r = resid_y_ - rho * resid_wy_;
  return log_det_->derivative(rho) + n_ * resid_wy_.dot(r) / r.squaredNorm();
}

Eigen::VectorXd ConcentratedLikelihood::theta(double rho) const { return theta_y_ - rho * theta_wy_; }

double ConcentratedLikelihood::operator()(double rho) const {
  return (*log_det_)(rho) - 0.5 * n_ * std::log(sigma2(rho));
}

RhoEstimate estimate_rho_ml(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const SpatialWeightMatrix& weights) {
  const LogDeterminant log_det(weights);
  return estimate_rho_ml(y, design, weights, log_det);
}

RhoEstimate estimate_rho_ml(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const SpatialWeightMatrix& weights, const LogDeterminant& log_det) {
  const ConcentratedLikelihood profile(y, design, weights, log_det);
  const RhoInterval interval = log_det.interval();
  const double margin = 1e-7;
  const double lo = interval.lower + margin;
  const double hi = interval.upper - margin;

  // Coarse scan brackets the global maximum; golden section refines inside the bracket.
  constexpr int kScan = 40;
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double value = profile(lo + (hi - lo) * k / kScan);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
  double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(c), fd = profile(d);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(d);
    }
  }
  double rho = 0.5 * (a + b);
  // The profile is flat at its peak, so rounding limits golden section to about sqrt(eps);
  // with the spectrum at hand, bisect the derivative instead.
  if (log_det.uses_spectrum()) {
    double left = std::max(lo, rho - 1e-6), right = std::min(hi, rho + 1e-6);
    if (profile.derivative(left) > 0.0 && profile.derivative(right) < 0.0) {
      for (int k = 0; k < 60 && right - left > 0.0; ++k) {
        const double mid = 0.5 * (left + right);
        if (mid <= left || mid >= right) break;
        (profile.derivative(mid) > 0.0 ? left : right) = mid;
      }
      rho = 0.5 * (left + right);
    }
  }
  if (profile(lo) > profile(rho)) rho = lo;
  if (profile(hi) > profile(rho)) rho = hi;

  RhoEstimate estimate;
  estimate.rho_hat = rho;
  estimate.theta_hat = profile.theta(rho);
  estimate.sigma2_hat = profile.sigma2(rho);
  require(estimate.sigma2_hat > 0.0, ErrorKind::kDesignRank,
          "response is reproduced exactly by the design; sigma^2 = 0");
  const double n = static_cast<double>(y.size());
  estimate.loglik = -0.5 * n * std::log(2.0 * std::numbers::pi * estimate.sigma2_hat) + log_det(rho) - 0.5 * n;
  estimate.admissible_interval = interval;
  estimate.at_boundary = (rho - lo) < 1e-6 || (hi - rho) < 1e-6;
  return estimate;
}

}  // namespace sfdnn
