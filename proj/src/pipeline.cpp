#include "sfdnn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "sfdnn/error.hpp"

namespace sfdnn {

void RegressionDataset::validate() const {
  const int n = size();
  require(n >= 1, ErrorKind::kDimension, "dataset has no rows");
  for (std::size_t p = 0; p < functional.size(); ++p) {
    if (functional[p].rows() != n || functional[p].cols() != grid.size()) {
      throw Error(ErrorKind::kDimension,
                  "functional predictor " + std::to_string(p) + " is " + std::to_string(functional[p].rows()) +
                      "x" + std::to_string(functional[p].cols()) + ", expected " + std::to_string(n) + "x" +
                      std::to_string(grid.size()));
    }
  }
  require(scalars.rows() == n, ErrorKind::kDimension, "scalar covariate rows do not match the response");
  if (weights) require(weights->size() == n, ErrorKind::kDimension, "weight matrix size does not match the response");
  if (coordinates) {
    require(static_cast<int>(coordinates->size()) == n, ErrorKind::kDimension,
            "coordinate count does not match the response");
  }
}

RegressionDataset RegressionDataset::subset(std::span<const int> rows) const {
  const std::vector<int> index(rows.begin(), rows.end());
  RegressionDataset out;
  out.grid = grid;
  for (const auto& curves : functional) out.functional.push_back(curves(index, Eigen::all));
  out.scalars = scalars(index, Eigen::all);
  out.response = response(index);
  if (weights) out.weights = weights->subset(rows);
  if (coordinates) {
    std::vector<Coordinates> picked;
    for (int i : rows) picked.push_back((*coordinates)[static_cast<std::size_t>(i)]);
    out.coordinates = std::move(picked);
  }
  return out;
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMlLinear: return "ml_linear";
    case ModelKind::kFdnn: return "fdnn";
    case ModelKind::kSfdnn: return "sfdnn";
  }
  return "ml_linear";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "ml" || name == "ml_linear") return ModelKind::kMlLinear;
  if (name == "fdnn") return ModelKind::kFdnn;
  if (name == "sfdnn") return ModelKind::kSfdnn;
  throw Error(ErrorKind::kConfig, "unknown model kind '" + name + "' (ml|fdnn|sfdnn)");
}

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& columns) {
  Standardizer s;
  const auto n = static_cast<double>(columns.rows());
  s.mean = columns.colwise().mean().transpose();
  s.scale.resize(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double var = (columns.col(j).array() - s.mean(j)).square().sum() / std::max(1.0, n - 1.0);
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& columns) const {
  require(columns.cols() == mean.size(), ErrorKind::kDimension, "standardizer width mismatch");
  return (columns.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

FpcaDesign build_fpca_design(const RegressionDataset& data, double variance_threshold) {
  data.validate();
  FpcaDesign out;
  for (const auto& curves : data.functional) out.fpca.push_back(fit_fpca(curves, data.grid, variance_threshold));
  out.design = fpca_design_for(out.fpca, data);
  return out;
}

Eigen::MatrixXd fpca_design_for(const std::vector<FpcaModel>& fpca, const RegressionDataset& data) {
  require(fpca.size() == data.functional.size(), ErrorKind::kDimension,
          "model and data disagree on the number of functional predictors");
  const Eigen::Index n = data.size();
  Eigen::Index width = 1 + data.num_scalars();
  for (const auto& model : fpca) width += model.retained;
  Eigen::MatrixXd design(n, width);
  design.col(0).setOnes();
  Eigen::Index column = 1;
  for (std::size_t p = 0; p < fpca.size(); ++p) {
    const Eigen::MatrixXd scores = project_scores(fpca[p], data.functional[p], data.grid);
    design.middleCols(column, scores.cols()) = scores;
    column += scores.cols();
  }
  design.rightCols(data.num_scalars()) = data.scalars;
  return design;
}

std::vector<BSplineBasis> make_bases(const NetworkArchitecture& arch, int degree) {
  std::vector<BSplineBasis> bases;
  for (int m : arch.basis_sizes) {
    if (m < 2) throw Error(ErrorKind::kInvalidArchitecture, "basis size must be at least 2");
    bases.push_back(make_bspline_basis(std::min(degree, m - 1), m));
  }
  return bases;
}

Eigen::MatrixXd basis_features(const std::vector<BSplineBasis>& bases, const RegressionDataset& data) {
  require(bases.size() == data.functional.size(), ErrorKind::kDimension,
          "basis count does not match the number of functional predictors");
  Eigen::Index width = 0;
  for (const auto& b : bases) width += b.size();
  Eigen::MatrixXd features(data.size(), width);
  Eigen::Index column = 0;
  for (std::size_t p = 0; p < bases.size(); ++p) {
    features.middleCols(column, bases[p].size()) = functional_inner_products(bases[p], data.functional[p], data.grid);
    column += bases[p].size();
  }
  return features;
}

namespace {

const SpatialWeightMatrix& require_weights(const RegressionDataset& data, const char* what) {
  if (!data.weights) throw Error(ErrorKind::kMissingWeights, std::string(what) + " needs a spatial weight matrix");
  return *data.weights;
}

RhoEstimate stage_one(const RegressionDataset& data, const FitOptions& options, std::vector<FpcaModel>* fpca) {
  const auto& weights = require_weights(data, "maximum-likelihood estimation");
  FpcaDesign design = build_fpca_design(data, options.variance_threshold);
  if (fpca != nullptr) *fpca = std::move(design.fpca);
  if (options.log_det != nullptr) return estimate_rho_ml(data.response, design.design, weights, *options.log_det);
  return estimate_rho_ml(data.response, design.design, weights);
}

FittedModel fit_network(ModelKind kind, const RegressionDataset& data, const NetworkArchitecture& arch,
                        const TrainConfig& config, const FitOptions& options, std::optional<double> rho) {
  data.validate();
  if (arch.num_functional() != data.num_functional() || arch.num_scalars != data.num_scalars()) {
    throw Error(ErrorKind::kInvalidArchitecture,
                "architecture expects " + std::to_string(arch.num_functional()) + " functional and " +
                    std::to_string(arch.num_scalars) + " scalar predictors, data has " +
                    std::to_string(data.num_functional()) + " and " + std::to_string(data.num_scalars()));
  }
  FittedModel model;
  model.kind = kind;
  model.grid = data.grid;
  model.rho_hat = rho;
  model.bases = make_bases(arch, options.basis_degree);

  const Eigen::MatrixXd raw_features = basis_features(model.bases, data);
  model.feature_scaling = Standardizer::fit(raw_features);
  model.scalar_scaling = Standardizer::fit(data.scalars);
  model.response_mean = data.response.mean();
  const double n = static_cast<double>(data.size());
  const double var_y = (data.response.array() - model.response_mean).square().sum() / std::max(1.0, n - 1.0);
  model.response_scale = var_y > 0.0 ? std::sqrt(var_y) : 1.0;

  const Eigen::MatrixXd features = model.feature_scaling.apply(raw_features);
  const Eigen::MatrixXd scalars = model.scalar_scaling.apply(data.scalars);
  const Eigen::VectorXd target = (data.response.array() - model.response_mean) / model.response_scale;

  std::optional<SpatialContext> context;
  if (rho) context.emplace(require_weights(data, "sfdnn"), *rho);
  const SpatialContext* ctx = context ? &*context : nullptr;
  TrainResult trained = train(arch, config, features, scalars, target, ctx);
  model.network = std::move(trained.params);
  model.loss_trace = std::move(trained.loss_trace);

  const Eigen::VectorXd fitted =
      (predict(model.network, features, scalars, ctx).array() * model.response_scale + model.response_mean).matrix();
  model.train_metrics = compute_metrics(data.response, fitted, MetricRole::kTrain);
  return model;
}

}  // namespace

FittedModel fit_ml_baseline(const RegressionDataset& data, const FitOptions& options) {
  FittedModel model;
  model.kind = ModelKind::kMlLinear;
  model.grid = data.grid;
  const RhoEstimate estimate = stage_one(data, options, &model.fpca);
  model.rho_hat = estimate.rho_hat;
  model.rho_at_boundary = estimate.at_boundary;
  model.theta = estimate.theta_hat;
  model.sigma2 = estimate.sigma2_hat;
  model.train_metrics = compute_metrics(data.response, predict_model(model, data), MetricRole::kTrain);
  return model;
}

FittedModel fit_fdnn_model(const RegressionDataset& data, const NetworkArchitecture& arch,
                           const TrainConfig& config, const FitOptions& options) {
  return fit_network(ModelKind::kFdnn, data, arch, config, options, std::nullopt);
}

FittedModel fit_sfdnn(const RegressionDataset& data, const NetworkArchitecture& arch, const TrainConfig& config,
                      const FitOptions& options) {
  require_weights(data, "sfdnn");
  double rho = 0.0;
  bool boundary = false;
  if (options.forced_rho) {
    rho = *options.forced_rho;
  } else {
    const RhoEstimate estimate = stage_one(data, options, nullptr);
    rho = estimate.rho_hat;
    boundary = estimate.at_boundary;
  }
  FittedModel model = fit_network(ModelKind::kSfdnn, data, arch, config, options, rho);
  model.rho_at_boundary = boundary;
  return model;
}

FittedModel fit_model(ModelKind kind, const RegressionDataset& data, const NetworkArchitecture& arch,
                      const TrainConfig& config, const FitOptions& options) {
  switch (kind) {
    case ModelKind::kMlLinear: return fit_ml_baseline(data, options);
    case ModelKind::kFdnn: return fit_fdnn_model(data, arch, config, options);
    case ModelKind::kSfdnn: return fit_sfdnn(data, arch, config, options);
  }
  throw Error(ErrorKind::kConfig, "unknown model kind");
}

Eigen::VectorXd predict_model(const FittedModel& model, const RegressionDataset& newdata) {
  newdata.validate();
  if (!(newdata.grid == model.grid)) throw Error(ErrorKind::kDimension, "new data grid differs from the training grid");
  const SpatialWeightMatrix* weights = nullptr;
  if (model.is_spatial()) {
    if (!newdata.weights) {
      throw Error(ErrorKind::kMissingWeights,
                  std::string(to_string(model.kind)) + " prediction needs the new data's weight matrix");
    }
    weights = &*newdata.weights;
  }

  if (model.kind == ModelKind::kMlLinear) {
    const Eigen::MatrixXd design = fpca_design_for(model.fpca, newdata);
    require(design.cols() == model.theta.size(), ErrorKind::kDimension, "design width does not match theta");
    return apply_spatial_filter(*weights, *model.rho_hat, design * model.theta);
  }

  const Eigen::MatrixXd features = model.feature_scaling.apply(basis_features(model.bases, newdata));
  const Eigen::MatrixXd scalars = model.scalar_scaling.apply(newdata.scalars);
  std::optional<SpatialContext> context;
  if (weights != nullptr) context.emplace(*weights, *model.rho_hat);
  const Eigen::VectorXd standardized = predict(model.network, features, scalars, context ? &*context : nullptr);
  return (standardized.array() * model.response_scale + model.response_mean).matrix();
}

namespace {

constexpr const char* kModelMagic = "sfdnn-model";
constexpr int kModelVersion = 1;

std::string format_real(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_vector(std::ostream& out, const std::string& tag, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << tag << ' ' << v.size();
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ' ' << format_real(v(k));
  out << '\n';
}

std::istringstream expect_line(std::istream& in, const std::string& tag) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kData, "model file ended early, expected '" + tag + "'");
  std::istringstream stream(line);
  std::string actual;
  stream >> actual;
  if (actual != tag) throw Error(ErrorKind::kData, "expected '" + tag + "' in model file", line);
  return stream;
}

double read_real(std::istringstream& stream, const std::string& tag) {
  std::string token;
  stream >> token;
  require(static_cast<bool>(stream), ErrorKind::kData, "missing value for '" + tag + "'");
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  require(end != token.c_str() && *end == '\0', ErrorKind::kData, "malformed number '" + token + "' in '" + tag + "'");
  return value;
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& tag) {
  auto stream = expect_line(in, tag);
  long long count = -1;
  stream >> count;
  require(static_cast<bool>(stream) && count >= 0, ErrorKind::kData, "malformed length for '" + tag + "'");
  Eigen::VectorXd v(count);
  for (long long k = 0; k < count; ++k) v(k) = read_real(stream, tag);
  return v;
}

long long read_integer(std::istream& in, const std::string& tag) {
  auto stream = expect_line(in, tag);
  long long value = 0;
  stream >> value;
  require(static_cast<bool>(stream), ErrorKind::kData, "malformed integer for '" + tag + "'");
  return value;
}

}  // namespace

void write_model(std::ostream& out, const FittedModel& model) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "kind " << to_string(model.kind) << '\n';
  out << "rho_hat " << (model.rho_hat ? format_real(*model.rho_hat) : std::string("none")) << '\n';
  out << "rho_at_boundary " << (model.rho_at_boundary ? 1 : 0) << '\n';
  write_vector(out, "grid", Eigen::Map<const Eigen::VectorXd>(model.grid.points().data(), model.grid.size()));
  out << "train_metrics " << format_real(model.train_metrics.error) << ' ' << format_real(model.train_metrics.r2)
      << '\n';
  if (model.kind == ModelKind::kMlLinear) {
    out << "fpca_count " << model.fpca.size() << '\n';
    for (const auto& f : model.fpca) {
      out << "fpca_retained " << f.retained << '\n';
      out << "fpca_threshold " << format_real(f.variance_threshold) << '\n';
      write_vector(out, "mean_curve", f.mean_curve);
      write_vector(out, "eigenvalues", f.eigenvalues);
      for (Eigen::Index k = 0; k < f.eigenfunctions.rows(); ++k) {
        write_vector(out, "eigenfunction", f.eigenfunctions.row(k).transpose());
      }
    }
    write_vector(out, "theta", model.theta);
    out << "sigma2 " << format_real(model.sigma2) << '\n';
  } else {
    out << "basis_count " << model.bases.size() << '\n';
    for (const auto& b : model.bases) {
      out << "basis_degree " << b.degree() << '\n';
      write_vector(out, "interior_knots",
                   Eigen::Map<const Eigen::VectorXd>(b.interior_knots().data(),
                                                     static_cast<Eigen::Index>(b.interior_knots().size())));
    }
    write_vector(out, "feature_mean", model.feature_scaling.mean);
    write_vector(out, "feature_scale", model.feature_scaling.scale);
    write_vector(out, "scalar_mean", model.scalar_scaling.mean);
    write_vector(out, "scalar_scale", model.scalar_scaling.scale);
    out << "response_scaling " << format_real(model.response_mean) << ' ' << format_real(model.response_scale)
        << '\n';
    write_vector(out, "loss_trace",
                 Eigen::Map<const Eigen::VectorXd>(model.loss_trace.data(),
                                                   static_cast<Eigen::Index>(model.loss_trace.size())));
    write_parameters(out, model.network);
  }
}

FittedModel read_model(std::istream& in) {
  {
    auto header = expect_line(in, kModelMagic);
    int version = 0;
    header >> version;
    require(version == kModelVersion, ErrorKind::kData, "unsupported model format version " + std::to_string(version));
  }
  FittedModel model;
  {
    auto line = expect_line(in, "kind");
    std::string kind;
    line >> kind;
    try {
      model.kind = parse_model_kind(kind);
    } catch (const Error&) {
      throw Error(ErrorKind::kData, "unknown model kind '" + kind + "' in model file");
    }
  }
  {
    auto line = expect_line(in, "rho_hat");
    std::string token;
    line >> token;
    if (token != "none") {
      std::istringstream value(token);
      model.rho_hat = read_real(value, "rho_hat");
    }
  }
  model.rho_at_boundary = read_integer(in, "rho_at_boundary") != 0;
  {
    const Eigen::VectorXd points = read_vector(in, "grid");
    model.grid = Grid(std::vector<double>(points.data(), points.data() + points.size()));
  }
  {
    auto line = expect_line(in, "train_metrics");
    model.train_metrics.error = read_real(line, "train_metrics");
    model.train_metrics.r2 = read_real(line, "train_metrics");
  }
  require(!model.is_spatial() || model.rho_hat.has_value(), ErrorKind::kData, "spatial model without rho_hat");

  if (model.kind == ModelKind::kMlLinear) {
    const long long count = read_integer(in, "fpca_count");
    for (long long p = 0; p < count; ++p) {
      FpcaModel f;
      f.retained = static_cast<int>(read_integer(in, "fpca_retained"));
      {
        auto line = expect_line(in, "fpca_threshold");
        f.variance_threshold = read_real(line, "fpca_threshold");
      }
      f.mean_curve = read_vector(in, "mean_curve");
      f.eigenvalues = read_vector(in, "eigenvalues");
      f.eigenfunctions.resize(f.eigenvalues.size(), f.mean_curve.size());
      for (Eigen::Index k = 0; k < f.eigenvalues.size(); ++k) {
        const Eigen::VectorXd row = read_vector(in, "eigenfunction");
        require(row.size() == f.mean_curve.size(), ErrorKind::kData, "eigenfunction length mismatch");
        f.eigenfunctions.row(k) = row.transpose();
      }
      require(f.retained >= 1 && f.retained <= f.eigenvalues.size(), ErrorKind::kData, "invalid retained count");
      model.fpca.push_back(std::move(f));
    }
    model.theta = read_vector(in, "theta");
    auto line = expect_line(in, "sigma2");
    model.sigma2 = read_real(line, "sigma2");
  } else {
    const long long count = read_integer(in, "basis_count");
    for (long long p = 0; p < count; ++p) {
      const int degree = static_cast<int>(read_integer(in, "basis_degree"));
      const Eigen::VectorXd knots = read_vector(in, "interior_knots");
      model.bases.emplace_back(degree, std::vector<double>(knots.data(), knots.data() + knots.size()));
    }
    model.feature_scaling.mean = read_vector(in, "feature_mean");
    model.feature_scaling.scale = read_vector(in, "feature_scale");
    model.scalar_scaling.mean = read_vector(in, "scalar_mean");
    model.scalar_scaling.scale = read_vector(in, "scalar_scale");
    {
      auto line = expect_line(in, "response_scaling");
      model.response_mean = read_real(line, "response_scaling");
      model.response_scale = read_real(line, "response_scaling");
    }
    const Eigen::VectorXd trace = read_vector(in, "loss_trace");
    model.loss_trace.assign(trace.data(), trace.data() + trace.size());
    model.network = read_parameters(in);
  }
  return model;
}

}  // namespace sfdnn
