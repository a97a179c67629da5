#include "sfdnn/simgen.hpp"

#include <cmath>
#include <numbers>

#include "sfdnn/error.hpp"
#include "sfdnn/random.hpp"

namespace sfdnn {

const char* to_string(ErrorDistribution dist) {
  switch (dist) {
    case ErrorDistribution::kGaussian: return "gaussian";
    case ErrorDistribution::kT3: return "t3";
    case ErrorDistribution::kExp1: return "exp1";
  }
  return "gaussian";
}

ErrorDistribution parse_error_distribution(const std::string& name) {
  if (name == "gaussian" || name == "normal") return ErrorDistribution::kGaussian;
  if (name == "t3") return ErrorDistribution::kT3;
  if (name == "exp1" || name == "exp") return ErrorDistribution::kExp1;
  throw Error(ErrorKind::kConfig, "unknown error distribution '" + name + "' (gaussian|t3|exp1)");
}

bool ScenarioConfig::is_published_design() const {
  const bool n_ok = n_train == 100 || n_train == 250 || n_train == 500;
  const bool rho_ok = rho == 0.1 || rho == 0.5 || rho == 0.9;
  return n_ok && rho_ok && n_test == 1000 && grid_size == 101 && beta0 == 0.0 && !double_filter &&
         noise_scale == 1.0;
}

void ScenarioConfig::validate() const {
  require(n_train >= 2 && n_test >= 2, ErrorKind::kConfig, "n_train and n_test must be at least 2");
  require(rho > -1.0 && rho < 1.0, ErrorKind::kConfig, "rho must lie in (-1, 1)");
  require(grid_size >= 2, ErrorKind::kConfig, "grid_size must be at least 2");
  require(noise_scale >= 0.0, ErrorKind::kConfig, "noise_scale must be nonnegative");
}

std::array<Eigen::VectorXd, 3> true_coefficient_curves(const Grid& grid) {
  std::array<Eigen::VectorXd, 3> curves;
  for (auto& c : curves) c.resize(grid.size());
  for (int g = 0; g < grid.size(); ++g) {
    const double angle = 2.0 * std::numbers::pi * grid[g];
    curves[0](g) = std::sin(angle);
    curves[1](g) = std::cos(angle);
    curves[2](g) = 2.0 * std::sin(angle);
  }
  return curves;
}

double kl_basis_function(int j, double u) {
  return std::sin(j * std::numbers::pi * u) - std::cos(j * std::numbers::pi * u);
}

double kl_score_variance(int j) { return 4.0 * std::pow(static_cast<double>(j), -1.5); }

namespace {

struct Covariates {
  std::vector<Eigen::MatrixXd> curves;
  Eigen::MatrixXd scalars;
};

// Draw order per site: 3 predictors x 5 scores, then 3 scalars.
Covariates draw_covariates(int n, const Grid& grid, CounterRng& rng) {
  Eigen::MatrixXd basis(kKarhunenLoeveTerms, grid.size());
  for (int j = 1; j <= kKarhunenLoeveTerms; ++j) {
    for (int g = 0; g < grid.size(); ++g) basis(j - 1, g) = kl_basis_function(j, grid[g]);
  }
  Covariates out;
  out.curves.assign(3, Eigen::MatrixXd(n, grid.size()));
  out.scalars.resize(n, 3);
  Eigen::RowVectorXd scores(kKarhunenLoeveTerms);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < 3; ++p) {
      for (int j = 1; j <= kKarhunenLoeveTerms; ++j) scores(j - 1) = rng.normal(0.0, std::sqrt(kl_score_variance(j)));
      out.curves[static_cast<std::size_t>(p)].row(i) = scores * basis;
    }
    for (int j = 0; j < 3; ++j) out.scalars(i, j) = rng.normal();
  }
  return out;
}

double draw_error(ErrorDistribution dist, CounterRng& rng) {
  switch (dist) {
    case ErrorDistribution::kGaussian: return rng.normal();
    case ErrorDistribution::kT3: return rng.student_t(3);
    case ErrorDistribution::kExp1: return rng.exponential();
  }
  return 0.0;
}

RegressionDataset make_dataset(const ScenarioConfig& cfg, int n, const Grid& grid, const TrueModel& truth,
                               Stream covariate_stream, Stream error_stream, Eigen::VectorXd& signal) {
  CounterRng covariate_rng(cfg.replication_seed, covariate_stream);
  CounterRng error_rng(cfg.replication_seed, error_stream);
  Covariates cov = draw_covariates(n, grid, covariate_rng);

  signal = Eigen::VectorXd::Constant(n, truth.beta0);
  const Eigen::VectorXd& w = grid.trapezoid_weights();
  for (int p = 0; p < 3; ++p) {
    const auto up = static_cast<std::size_t>(p);
    signal += cov.curves[up] * w.cwiseProduct(truth.beta_curves[up]);
    signal += truth.gamma[up] * cov.scalars.col(p);
  }
  Eigen::VectorXd errors(n);
  for (int i = 0; i < n; ++i) errors(i) = cfg.noise_scale * draw_error(cfg.error_dist, error_rng);

  RegressionDataset data;
  data.grid = grid;
  data.functional = std::move(cov.curves);
  data.scalars = std::move(cov.scalars);
  data.weights = build_inverse_distance_weights(n);
  if (cfg.rho == 0.0) {
    data.response = signal + errors;
  } else {
    const SpatialFilter filter(*data.weights, cfg.rho);
    const Eigen::VectorXd inner = cfg.double_filter ? Eigen::VectorXd(filter.solve(errors)) : errors;
    data.response = filter.solve(signal + inner);
  }
  return data;
}

}  // namespace

ScenarioData generate_scenario_dataset(const ScenarioConfig& cfg) {
  cfg.validate();
  const Grid grid = Grid::uniform(cfg.grid_size);
  ScenarioData out;
  out.truth.beta0 = cfg.beta0;
  out.truth.beta_curves = true_coefficient_curves(grid);
  out.train = make_dataset(cfg, cfg.n_train, grid, out.truth, Stream::kTrainCovariates, Stream::kTrainErrors,
                           out.train_signal);
  out.test = make_dataset(cfg, cfg.n_test, grid, out.truth, Stream::kTestCovariates, Stream::kTestErrors,
                          out.test_signal);
  return out;
}

}  // namespace sfdnn
