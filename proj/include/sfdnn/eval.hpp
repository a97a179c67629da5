#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sfdnn/fdnn.hpp"
#include "sfdnn/metrics.hpp"
#include "sfdnn/pipeline.hpp"
#include "sfdnn/simgen.hpp"

namespace sfdnn {

/// One point of a tuning grid. Every functional predictor gets `basis_size` basis
/// functions and every hidden layer uses `activation`.
struct NetworkChoice {
  std::vector<int> hidden_sizes = {16, 8};
  double learning_rate = 1e-3;
  int batch_size = 32;
  int basis_size = 8;
  double weight_decay = 0.0;
  int epochs = 300;
  Activation activation = Activation::kRelu;
  /// Neighbour count for KNN bi-square weights; only used when coordinates are known.
  int neighbors = 4;

  NetworkArchitecture architecture(int num_functional, int num_scalars) const;
  /// `base` supplies the fields the grid does not cover (tau, validation split, seed).
  TrainConfig train_config(const TrainConfig& base) const;
  std::string describe() const;

  bool operator==(const NetworkChoice&) const = default;
};

struct TuneGrid {
  std::vector<std::vector<int>> hidden_sizes = {{16, 8}};
  std::vector<double> learning_rates = {1e-3};
  std::vector<int> batch_sizes = {32};
  std::vector<int> basis_sizes = {8};
  std::vector<double> weight_decays = {0.0};
  std::vector<int> epochs = {300};
  std::vector<Activation> activations = {Activation::kRelu};
  std::vector<int> neighbor_counts = {4};

  /// Throws kConfig naming the first empty list.
  void validate() const;
  /// Cartesian product in field order, the last field varying fastest.
  std::vector<NetworkChoice> candidates() const;

  bool operator==(const TuneGrid&) const = default;
};

struct CvRow {
  NetworkChoice choice;
  long long weight_count = 0;
  double cv_mspe = 0.0;  // infinite when a fold failed
  std::string failure;
};

struct TuneResult {
  NetworkChoice best;
  std::size_t best_index = 0;
  std::vector<CvRow> table;  // in candidate order
};

struct TuneOptions {
  TrainConfig base_config;  // seed is replaced by the tuning seed
  FitOptions fit;
  int jobs = 1;
};

/// Exhaustive K-fold search. CV-MSPE is the held-out sum of squares over all folds
/// divided by n. Ties go to the smaller network, then to the earlier candidate.
/// With coordinates present, spatial kinds rebuild KNN bi-square weights inside each
/// fold; otherwise the weight matrix is restricted to the fold and renormalized.
TuneResult kfold_tune(const RegressionDataset& data, ModelKind kind, const TuneGrid& grid, int folds,
                      std::uint64_t seed, const TuneOptions& options = {});

void write_cv_table(std::ostream& out, const TuneResult& result);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct StudyCell {
  ScenarioConfig scenario;
  ModelKind kind = ModelKind::kMlLinear;
  NetworkChoice network;  // unused for ml_linear
  int replications = 0;   // successful ones
  int failed = 0;
  int at_boundary = 0;    // rho-hat within tolerance of the admissible interval's ends
  MetricSummary mse, r2, mspe, r2_test, rho_hat;
  std::vector<std::string> failures;  // "replication r: message"
};

struct StudyTable {
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::vector<ScenarioConfig> scenarios;
  std::vector<StudyCell> cells;  // scenario-major, kinds in request order

  std::size_t scenario_count() const noexcept { return scenarios.size(); }
  const StudyCell& cell(std::size_t scenario, ModelKind kind) const;
};

struct StudySettings {
  NetworkChoice fdnn;
  NetworkChoice sfdnn;
  /// Holds out 20% of each training set for best-epoch restore.
  TrainConfig base_config = [] {
    TrainConfig c;
    c.validation_fraction = 0.2;
    return c;
  }();
  /// When set, each network kind is tuned once per scenario on a pilot dataset
  /// (replication index R, outside the study) and the winner is used throughout.
  std::optional<TuneGrid> tune_grid;
  int tune_folds = 5;
  int jobs = 1;
};

/// Replication r of every scenario uses seed base_seed ^ r; all kinds see the same data.
StudyTable monte_carlo_study(const std::vector<ScenarioConfig>& scenarios, const std::vector<ModelKind>& kinds,
                             int replications, std::uint64_t base_seed, const StudySettings& settings = {});

/// One row per scenario x kind x metric.
void write_study_csv(std::ostream& out, const StudyTable& table);
/// Mean with sd in parentheses, one block per scenario.
void write_study_report(std::ostream& out, const StudyTable& table);

}  // namespace sfdnn
