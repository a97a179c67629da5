#include "sfdnn/fdnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sfdnn/error.hpp"
#include "sfdnn/random.hpp"

namespace sfdnn {

const char* to_string(Activation activation) {
  switch (activation) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw Error(ErrorKind::kConfig, "unknown activation '" + name + "' (relu|sigmoid|tanh|identity)");
}

int NetworkArchitecture::functional_width() const noexcept {
  return std::accumulate(basis_sizes.begin(), basis_sizes.end(), 0);
}

long long NetworkArchitecture::weight_count() const noexcept {
  if (hidden_sizes.empty()) return 0;
  long long count = static_cast<long long>(hidden_sizes.front()) * (functional_width() + num_scalars);
  for (std::size_t r = 1; r < hidden_sizes.size(); ++r) {
    count += static_cast<long long>(hidden_sizes[r - 1]) * hidden_sizes[r];
  }
  return count + hidden_sizes.back();
}

void NetworkArchitecture::validate() const {
  require(!hidden_sizes.empty(), ErrorKind::kInvalidArchitecture, "network needs at least one hidden layer");
  require(activations.size() == hidden_sizes.size(), ErrorKind::kInvalidArchitecture,
          "need one activation per hidden layer");
  require(num_scalars >= 0, ErrorKind::kInvalidArchitecture, "scalar count must be nonnegative");
  for (int m : basis_sizes) require(m >= 1, ErrorKind::kInvalidArchitecture, "basis sizes must be positive");
  for (int h : hidden_sizes) require(h >= 1, ErrorKind::kInvalidArchitecture, "layer sizes must be positive");
  require(functional_width() + num_scalars >= 1, ErrorKind::kInvalidArchitecture, "network has no inputs");
}

Eigen::VectorXd NetworkParameters::functional_coefficients(int neuron, int predictor) const {
  const auto& sizes = architecture.basis_sizes;
  require(predictor >= 0 && predictor < static_cast<int>(sizes.size()), ErrorKind::kDimension,
          "predictor index out of range");
  require(neuron >= 0 && neuron < functional.rows(), ErrorKind::kDimension, "neuron index out of range");
  const int offset = std::accumulate(sizes.begin(), sizes.begin() + predictor, 0);
  return functional.row(neuron).segment(offset, sizes[static_cast<std::size_t>(predictor)]).transpose();
}

NetworkParameters NetworkParameters::zeros_like() const {
  NetworkParameters z = *this;
  z.for_each_tensor([](auto& t) { t.setZero(); });
  return z;
}

long long NetworkParameters::size() const {
  long long total = 0;
  for_each_tensor([&](const auto& t) { total += t.size(); });
  return total;
}

bool NetworkParameters::all_finite() const {
  bool finite = true;
  for_each_tensor([&](const auto& t) { finite = finite && t.allFinite(); });
  return finite;
}

bool NetworkParameters::operator==(const NetworkParameters& other) const {
  if (!(architecture == other.architecture) || dense.size() != other.dense.size() ||
      biases.size() != other.biases.size()) {
    return false;
  }
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
  };
  if (!same(functional, other.functional) || !same(scalar, other.scalar)) return false;
  for (std::size_t k = 0; k < dense.size(); ++k) {
    if (!same(dense[k], other.dense[k])) return false;
  }
  for (std::size_t k = 0; k < biases.size(); ++k) {
    if (!same(biases[k], other.biases[k])) return false;
  }
  return true;
}

SpatialContext::SpatialContext(const SpatialWeightMatrix& weights, double rho_hat)
    : rho_hat_(rho_hat), filter_(std::make_shared<const SpatialFilter>(weights, rho_hat)) {}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorKind::kConfig, "learning rate must be positive");
  require(batch_size >= 1, ErrorKind::kConfig, "batch size must be at least 1");
  require(max_epochs >= 1, ErrorKind::kConfig, "max_epochs must be at least 1");
  require(early_stop_threshold >= 0.0, ErrorKind::kConfig, "early-stop threshold must be nonnegative");
  require(weight_decay >= 0.0, ErrorKind::kConfig, "weight decay must be nonnegative");
  require(validation_fraction >= 0.0 && validation_fraction <= 0.5, ErrorKind::kConfig,
          "validation fraction must lie in [0, 0.5]");
  require(patience >= 0, ErrorKind::kConfig, "patience must be nonnegative");
}

namespace {

void glorot(Eigen::MatrixXd& m, int fan_in, int fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  }
}

void activate(Activation activation, Eigen::MatrixXd& z) {
  switch (activation) {
    case Activation::kRelu: z = z.cwiseMax(0.0); break;
    case Activation::kSigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::kTanh: z = z.array().tanh().matrix(); break;
    case Activation::kIdentity: break;
  }
}

// Multiplies delta in place by g'(z); `h` = g(z).
void apply_derivative(Activation activation, const Eigen::MatrixXd& z, const Eigen::MatrixXd& h,
                      Eigen::MatrixXd& delta) {
  switch (activation) {
    case Activation::kRelu: delta.array() *= (z.array() > 0.0).cast<double>(); break;
    case Activation::kSigmoid: delta.array() *= h.array() * (1.0 - h.array()); break;
    case Activation::kTanh: delta.array() *= 1.0 - h.array().square(); break;
    case Activation::kIdentity: break;
  }
}

void check_inputs(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                  const Eigen::Ref<const Eigen::MatrixXd>& scalars, const SpatialContext* context) {
  const auto& arch = params.architecture;
  if (features.cols() != arch.functional_width() || scalars.cols() != arch.num_scalars ||
      features.rows() != scalars.rows()) {
    throw Error(ErrorKind::kDimension,
                "inputs " + std::to_string(features.rows()) + "x" + std::to_string(features.cols()) + " / " +
                    std::to_string(scalars.rows()) + "x" + std::to_string(scalars.cols()) +
                    " do not match architecture widths " + std::to_string(arch.functional_width()) + " / " +
                    std::to_string(arch.num_scalars));
  }
  if (context != nullptr && context->size() != features.rows()) {
    throw Error(ErrorKind::kDimension, "spatial context has " + std::to_string(context->size()) +
                                           " sites but inputs have " + std::to_string(features.rows()) + " rows");
  }
}

struct TensorView {
  double* data;
  Eigen::Index size;
  bool is_bias;
};

std::vector<TensorView> tensor_views(NetworkParameters& p) {
  std::vector<TensorView> views;
  views.push_back({p.functional.data(), p.functional.size(), false});
  views.push_back({p.scalar.data(), p.scalar.size(), false});
  for (auto& m : p.dense) views.push_back({m.data(), m.size(), false});
  for (auto& b : p.biases) views.push_back({b.data(), b.size(), true});
  return views;
}

}  // namespace

NetworkParameters init_parameters(const NetworkArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  CounterRng rng(seed, Stream::kInit);
  NetworkParameters p;
  p.architecture = arch;
  const int n1 = arch.hidden_sizes.front();
  const int fan_in = arch.functional_width() + arch.num_scalars;
  p.functional.resize(n1, arch.functional_width());
  p.scalar.resize(n1, arch.num_scalars);
  glorot(p.functional, fan_in, n1, rng);
  glorot(p.scalar, fan_in, n1, rng);
  const int layers = arch.num_hidden_layers();
  for (int r = 0; r < layers; ++r) {
    const int rows = r + 1 < layers ? arch.hidden_sizes[static_cast<std::size_t>(r + 1)] : 1;
    const int cols = arch.hidden_sizes[static_cast<std::size_t>(r)];
    Eigen::MatrixXd m(rows, cols);
    glorot(m, cols, rows, rng);
    p.dense.push_back(std::move(m));
    p.biases.push_back(Eigen::VectorXd::Zero(cols));
  }
  p.biases.push_back(Eigen::VectorXd::Zero(1));
  return p;
}

ForwardResult forward(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                      const Eigen::Ref<const Eigen::MatrixXd>& scalars, const SpatialContext* context) {
  check_inputs(params, features, scalars, context);
  const auto& arch = params.architecture;
  ForwardResult result;
  Eigen::MatrixXd z = features * params.functional.transpose() + scalars * params.scalar.transpose();
  if (context != nullptr) z = context->filter().solve(z);
  for (int r = 0; r < arch.num_hidden_layers(); ++r) {
    if (r > 0) z = result.cache.activations.back() * params.dense[static_cast<std::size_t>(r - 1)].transpose();
    z.rowwise() += params.biases[static_cast<std::size_t>(r)].transpose();
    Eigen::MatrixXd h = z;
    activate(arch.activations[static_cast<std::size_t>(r)], h);
    result.cache.pre_activations.push_back(std::move(z));
    result.cache.activations.push_back(std::move(h));
  }
  result.predictions = result.cache.activations.back() * params.dense.back().transpose();
  result.predictions.array() += params.biases.back()(0);
  if (!result.predictions.allFinite()) {
    throw Error(ErrorKind::kNumericOverflow, "network produced non-finite predictions");
  }
  return result;
}

Eigen::VectorXd predict(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                        const Eigen::Ref<const Eigen::MatrixXd>& scalars, const SpatialContext* context) {
  return forward(params, features, scalars, context).predictions;
}

double loss(const Eigen::Ref<const Eigen::VectorXd>& predictions, const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(predictions.size() == y.size(), ErrorKind::kDimension, "prediction and response lengths differ");
  require(y.size() > 0, ErrorKind::kDimension, "loss of an empty sample");
  return (predictions - y).squaredNorm() / static_cast<double>(y.size());
}

NetworkParameters gradients(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::MatrixXd>& scalars,
                            const Eigen::Ref<const Eigen::VectorXd>& y, const SpatialContext* context,
                            std::span<const int> rows) {
  check_inputs(params, features, scalars, context);
  require(y.size() == features.rows(), ErrorKind::kDimension, "response length does not match inputs");
  require(y.size() > 0, ErrorKind::kDimension, "gradient of an empty batch");

  // Without a context, rows are independent: evaluate the batch rows only.
  if (context == nullptr && !rows.empty()) {
    const std::vector<int> index(rows.begin(), rows.end());
    const Eigen::MatrixXd f = features(index, Eigen::all);
    const Eigen::MatrixXd s = scalars(index, Eigen::all);
    const Eigen::VectorXd t = y(index);
    return gradients(params, f, s, t, nullptr, {});
  }

  const auto& arch = params.architecture;
  const ForwardResult fwd = forward(params, features, scalars, context);
  Eigen::VectorXd d_out = Eigen::VectorXd::Zero(y.size());
  if (rows.empty()) {
    d_out = 2.0 * (fwd.predictions - y) / static_cast<double>(y.size());
  } else {
    for (int i : rows) {
      require(i >= 0 && i < y.size(), ErrorKind::kDimension, "batch row out of range");
      d_out(i) += 2.0 * (fwd.predictions(i) - y(i)) / static_cast<double>(rows.size());
    }
  }

  NetworkParameters grad = params.zeros_like();
  const int layers = arch.num_hidden_layers();
  const auto& h = fwd.cache.activations;
  const auto& z = fwd.cache.pre_activations;
  grad.biases.back()(0) = d_out.sum();
  grad.dense.back() = d_out.transpose() * h.back();
  Eigen::MatrixXd delta = d_out * params.dense.back();
  for (int r = layers - 1; r >= 0; --r) {
    const auto ur = static_cast<std::size_t>(r);
    apply_derivative(arch.activations[ur], z[ur], h[ur], delta);
    grad.biases[ur] = delta.colwise().sum().transpose();
    if (r > 0) {
      grad.dense[ur - 1] = delta.transpose() * h[ur - 1];
      delta = delta * params.dense[ur - 1];
    }
  }
  // delta is now dL/dZ1; the filter contributes its transpose solve.
  const Eigen::MatrixXd d_pre = context != nullptr ? context->filter().solve_transpose(delta) : delta;
  grad.functional = d_pre.transpose() * features;
  grad.scalar = d_pre.transpose() * scalars;
  return grad;
}

TrainResult train(const NetworkArchitecture& arch, const TrainConfig& config,
                  const Eigen::Ref<const Eigen::MatrixXd>& features,
                  const Eigen::Ref<const Eigen::MatrixXd>& scalars, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const SpatialContext* context) {
  arch.validate();
  config.validate();
  const int n = static_cast<int>(y.size());
  require(n >= 2, ErrorKind::kInsufficientData, "training needs at least 2 rows");
  require(features.rows() == n && scalars.rows() == n, ErrorKind::kDimension,
          "features, scalars and response disagree on n");

  // (I - rho W)^-1 (F C' + S O') = F~ C' + S~ O': filtering the inputs once gives the same
  // network and lets mini-batches touch only their own rows.
  Eigen::MatrixXd f = features;
  Eigen::MatrixXd s = scalars;
  if (context != nullptr) {
    require(context->size() == n, ErrorKind::kDimension, "spatial context size does not match rows");
    f = context->filter().solve(features);
    if (s.cols() > 0) s = context->filter().solve(scalars);
  }

  std::vector<int> train_rows(static_cast<std::size_t>(n));
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::vector<int> validation_rows;
  if (config.validation_fraction > 0.0) {
    const auto order = shuffled_indices(n, config.seed, Stream::kValidationSplit);
    const int n_val = std::max(1, static_cast<int>(std::floor(config.validation_fraction * n)));
    require(n - n_val >= 1, ErrorKind::kInsufficientData, "validation split leaves no training rows");
    validation_rows.assign(order.end() - n_val, order.end());
    train_rows.assign(order.begin(), order.end() - n_val);
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(validation_rows.begin(), validation_rows.end());
  }
  const Eigen::MatrixXd f_train = f(train_rows, Eigen::all);
  const Eigen::MatrixXd s_train = s(train_rows, Eigen::all);
  const Eigen::VectorXd y_train = y(train_rows);
  Eigen::MatrixXd f_val, s_val;
  Eigen::VectorXd y_val;
  if (!validation_rows.empty()) {
    f_val = f(validation_rows, Eigen::all);
    s_val = s(validation_rows, Eigen::all);
    y_val = y(validation_rows);
  }

  TrainResult result;
  NetworkParameters params = init_parameters(arch, config.seed);
  NetworkParameters first_moment = params.zeros_like();
  NetworkParameters second_moment = params.zeros_like();
  auto param_views = tensor_views(params);
  auto m_views = tensor_views(first_moment);
  auto v_views = tensor_views(second_moment);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEpsilon = 1e-8;
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  const int n_train = static_cast<int>(train_rows.size());
  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  CounterRng shuffle_rng(config.seed, Stream::kShuffle);

  NetworkParameters best = params;
  double best_validation = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  double previous_loss = 0.0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<int>(order));
    for (int start = 0; start < n_train; start += config.batch_size) {
      const int stop = std::min(n_train, start + config.batch_size);
      const std::span<const int> batch(order.data() + start, static_cast<std::size_t>(stop - start));
      NetworkParameters grad;
      try {
        grad = gradients(params, f_train, s_train, y_train, nullptr, batch);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumericOverflow) throw;
        result.loss_trace.push_back(std::numeric_limits<double>::quiet_NaN());
        throw TrainingDivergedError("network overflowed during epoch " + std::to_string(epoch), result.loss_trace);
      }
      const auto grad_views = tensor_views(grad);
      beta1_power *= kBeta1;
      beta2_power *= kBeta2;
      const double step = config.learning_rate;
      for (std::size_t t = 0; t < param_views.size(); ++t) {
        double* p = param_views[t].data;
        double* m = m_views[t].data;
        double* v = v_views[t].data;
        const double* g = grad_views[t].data;
        const bool decay = !param_views[t].is_bias && config.weight_decay > 0.0;
        for (Eigen::Index k = 0; k < param_views[t].size; ++k) {
          m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
          v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
          const double m_hat = m[k] / (1.0 - beta1_power);
          const double v_hat = v[k] / (1.0 - beta2_power);
          p[k] -= step * m_hat / (std::sqrt(v_hat) + kEpsilon);
          if (decay) p[k] -= step * config.weight_decay * p[k];
        }
      }
    }

    double epoch_loss = std::numeric_limits<double>::quiet_NaN();
    if (params.all_finite()) {
      try {
        epoch_loss = loss(predict(params, f_train, s_train), y_train);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumericOverflow) throw;
      }
    }
    result.loss_trace.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError("training loss became non-finite at epoch " + std::to_string(epoch),
                                  result.loss_trace);
    }

    bool stop = false;
    if (!validation_rows.empty()) {
      const double validation_loss = loss(predict(params, f_val, s_val), y_val);
      result.validation_trace.push_back(validation_loss);
      if (validation_loss < best_validation) {
        best_validation = validation_loss;
        best = params;
        result.best_epoch = epoch;
        epochs_since_best = 0;
      } else if (config.patience > 0 && ++epochs_since_best >= config.patience) {
        stop = true;
      }
    }
    const double delta = epoch == 1 ? epoch_loss : std::abs(previous_loss - epoch_loss);
    previous_loss = epoch_loss;
    if (delta < config.early_stop_threshold) stop = true;
    if (stop) break;
  }

  if (validation_rows.empty()) {
    result.params = std::move(params);
    result.best_epoch = static_cast<int>(result.loss_trace.size());
  } else {
    result.params = std::move(best);
  }
  return result;
}

namespace {

constexpr const char* kParameterMagic = "sfdnn-network";
constexpr int kParameterVersion = 1;

void write_tensor(std::ostream& out, const std::string& name, const Eigen::Ref<const Eigen::MatrixXd>& t) {
  out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols();
  char buffer[32];
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      std::snprintf(buffer, sizeof buffer, "%.17g", t(i, j));
      out << ' ' << buffer;
    }
  }
  out << '\n';
}

std::istringstream next_line(std::istream& in, const std::string& expected_tag) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kData, "parameter file ended early, expected '" + expected_tag + "'");
  }
  std::istringstream stream(line);
  std::string tag;
  stream >> tag;
  if (tag != expected_tag) {
    throw Error(ErrorKind::kData, "expected '" + expected_tag + "' in parameter file", line);
  }
  return stream;
}

std::vector<int> read_int_list(std::istringstream& stream) {
  int count = -1;
  stream >> count;
  require(static_cast<bool>(stream) && count >= 0, ErrorKind::kData, "malformed list length in parameter file");
  std::vector<int> values(static_cast<std::size_t>(count));
  for (auto& v : values) stream >> v;
  require(static_cast<bool>(stream), ErrorKind::kData, "malformed integer list in parameter file");
  return values;
}

Eigen::MatrixXd read_tensor(std::istream& in, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  auto stream = next_line(in, "tensor");
  std::string actual_name;
  Eigen::Index r = -1, c = -1;
  stream >> actual_name >> r >> c;
  if (actual_name != name || r != rows || c != cols) {
    throw Error(ErrorKind::kData, "tensor '" + actual_name + "' does not match expected '" + name + "' " +
                                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  Eigen::MatrixXd t(rows, cols);
  std::string token;
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      stream >> token;
      require(static_cast<bool>(stream), ErrorKind::kData, "tensor '" + name + "' has too few values");
      t(i, j) = std::strtod(token.c_str(), nullptr);
    }
  }
  return t;
}

}  // namespace

void write_parameters(std::ostream& out, const NetworkParameters& params) {
  const auto& arch = params.architecture;
  out << kParameterMagic << ' ' << kParameterVersion << '\n';
  out << "basis_sizes " << arch.basis_sizes.size();
  for (int m : arch.basis_sizes) out << ' ' << m;
  out << "\nnum_scalars " << arch.num_scalars << "\nhidden_sizes " << arch.hidden_sizes.size();
  for (int h : arch.hidden_sizes) out << ' ' << h;
  out << "\nactivations " << arch.activations.size();
  for (Activation a : arch.activations) out << ' ' << to_string(a);
  out << '\n';
  write_tensor(out, "functional", params.functional);
  write_tensor(out, "scalar", params.scalar);
  for (std::size_t k = 0; k < params.dense.size(); ++k) write_tensor(out, "dense" + std::to_string(k), params.dense[k]);
  for (std::size_t k = 0; k < params.biases.size(); ++k) write_tensor(out, "bias" + std::to_string(k), params.biases[k]);
}

NetworkParameters read_parameters(std::istream& in) {
  {
    auto header = next_line(in, kParameterMagic);
    int version = 0;
    header >> version;
    require(version == kParameterVersion, ErrorKind::kData,
            "unsupported parameter format version " + std::to_string(version));
  }
  NetworkArchitecture arch;
  {
    auto line = next_line(in, "basis_sizes");
    arch.basis_sizes = read_int_list(line);
  }
  {
    auto line = next_line(in, "num_scalars");
    line >> arch.num_scalars;
    require(static_cast<bool>(line), ErrorKind::kData, "malformed num_scalars");
  }
  {
    auto line = next_line(in, "hidden_sizes");
    arch.hidden_sizes = read_int_list(line);
  }
  {
    auto line = next_line(in, "activations");
    int count = -1;
    line >> count;
    require(static_cast<bool>(line) && count >= 0, ErrorKind::kData, "malformed activation count");
    for (int k = 0; k < count; ++k) {
      std::string name;
      line >> name;
      arch.activations.push_back(parse_activation(name));
    }
  }
  try {
    arch.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kData, std::string("parameter file architecture invalid: ") + e.what());
  }

  NetworkParameters p = init_parameters(arch, 0);
  const int n1 = arch.hidden_sizes.front();
  p.functional = read_tensor(in, "functional", n1, arch.functional_width());
  p.scalar = read_tensor(in, "scalar", n1, arch.num_scalars);
  for (std::size_t k = 0; k < p.dense.size(); ++k) {
    p.dense[k] = read_tensor(in, "dense" + std::to_string(k), p.dense[k].rows(), p.dense[k].cols());
  }
  for (std::size_t k = 0; k < p.biases.size(); ++k) {
    p.biases[k] = read_tensor(in, "bias" + std::to_string(k), p.biases[k].size(), 1);
  }
  require(p.all_finite(), ErrorKind::kData, "parameter file contains non-finite values");
  return p;
}

}  // namespace sfdnn
