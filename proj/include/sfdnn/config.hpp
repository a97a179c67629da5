#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfdnn/eval.hpp"
#include "sfdnn/io.hpp"
#include "sfdnn/pipeline.hpp"
#include "sfdnn/simgen.hpp"

namespace sfdnn {

/// Settings for one CLI invocation, read from `key = value` lines. '#' starts a comment.
/// List values are comma separated; hidden-size candidates for tuning are separated
/// by ';' (e.g. `tune_hidden_sizes = 16,8; 8,4`). An empty tuning list means "the
/// single value of the corresponding plain key".
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int jobs = 1;
  ModelKind kind = ModelKind::kSfdnn;
  LogTransform log_transform = LogTransform::kNone;

  // simulate
  int n_train = 500;
  int n_test = 1000;
  double rho = 0.5;
  ErrorDistribution error_dist = ErrorDistribution::kGaussian;
  int grid_size = 101;
  double beta0 = 0.0;
  bool double_filter = false;
  double noise_scale = 1.0;

  // network and training
  std::vector<int> hidden_sizes = {16, 8};
  Activation activation = Activation::kRelu;
  int basis_size = 8;
  int basis_degree = 3;
  double variance_threshold = 0.95;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 300;
  double early_stop_threshold = 0.0;
  double weight_decay = 0.0;
  double validation_fraction = 0.2;
  int patience = 0;

  // spatial weights
  int neighbors = 4;
  int weights_size = 0;  // inverse-distance matrix size for `weights`; 0 means n_train

  // tune
  int folds = 5;
  std::vector<std::vector<int>> tune_hidden_sizes;
  std::vector<double> tune_learning_rates;
  std::vector<int> tune_batch_sizes;
  std::vector<int> tune_basis_sizes;
  std::vector<double> tune_weight_decays;
  std::vector<int> tune_epochs;
  std::vector<Activation> tune_activations;
  std::vector<int> tune_neighbor_counts;

  // mc-bench
  int mc_replications = 25;
  std::vector<int> mc_n_train = {500};
  std::vector<double> mc_rho = {0.9};
  std::vector<ErrorDistribution> mc_error_dists = {ErrorDistribution::kGaussian};
  std::vector<ModelKind> mc_kinds = {ModelKind::kMlLinear, ModelKind::kFdnn, ModelKind::kSfdnn};
  bool mc_tune = false;

  // input files
  std::string train_functional;
  std::string train_scalars;
  std::string train_coordinates;
  std::string train_weights;
  std::string test_functional;
  std::string test_scalars;
  std::string test_coordinates;
  std::string test_weights;
  std::string model;

  ScenarioConfig scenario() const;
  NetworkChoice network() const;
  TrainConfig base_train_config() const;
  TuneGrid tune_grid() const;
  FitOptions fit_options() const;
  std::vector<ScenarioConfig> mc_scenarios() const;

  /// Every range problem, one per entry; empty when valid.
  std::vector<std::string> problems() const;
  /// Keys a subcommand cannot run without, and input files that must exist.
  void validate_for(const std::string& subcommand) const;

  bool operator==(const RunConfig&) const = default;
};

/// Throws kConfig listing every unknown key, malformed value and range problem, each
/// with its line number; `source` prefixes the locations.
RunConfig parse_config_text(const std::string& text, const std::string& source = "config");
RunConfig parse_config(const std::string& path);
/// Every key, one per line, in a form parse_config_text accepts.
std::string serialize_config(const RunConfig& config);

/// Applies one `key = value` assignment; used for command-line overrides.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace sfdnn
