#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfdnn/spatial.hpp"

namespace sfdnn {

enum class Activation { kRelu, kSigmoid, kTanh, kIdentity };

const char* to_string(Activation activation);
Activation parse_activation(const std::string& name);

/// Layer layout of a functional network. The first hidden layer sees the basis
/// inner products of every functional predictor (sum of basis_sizes columns) plus
/// the J scalar covariates; the output is one linear unit.
struct NetworkArchitecture {
  std::vector<int> basis_sizes;         // M_p, one entry per functional predictor
  int num_scalars = 0;                  // J
  std::vector<int> hidden_sizes;        // n_1 .. n_R
  std::vector<Activation> activations;  // one per hidden layer

  int num_functional() const noexcept { return static_cast<int>(basis_sizes.size()); }
  int functional_width() const noexcept;
  int num_hidden_layers() const noexcept { return static_cast<int>(hidden_sizes.size()); }
  /// Number of weights (biases excluded).
  long long weight_count() const noexcept;
  /// Throws kInvalidArchitecture.
  void validate() const;

  bool operator==(const NetworkArchitecture&) const = default;
};

/// Learnable parameters. Row l of `functional` concatenates the coefficient vectors
/// c_{l,p,.} over predictors p; `dense[r]` maps hidden layer r to layer r+1 and the
/// last entry maps the final hidden layer to the output. `biases` has one vector per
/// hidden layer plus a length-1 output bias.
struct NetworkParameters {
  NetworkArchitecture architecture;
  Eigen::MatrixXd functional;  // n_1 x sum(M_p)
  Eigen::MatrixXd scalar;      // n_1 x J
  std::vector<Eigen::MatrixXd> dense;
  std::vector<Eigen::VectorXd> biases;

  /// c_{l,p,.} of length M_p.
  Eigen::VectorXd functional_coefficients(int neuron, int predictor) const;

  /// Same shapes, all zero.
  NetworkParameters zeros_like() const;
  long long size() const;
  bool all_finite() const;

  /// Flat views used by the optimizer; the visiting order is fixed.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(functional);
    f(scalar);
    for (auto& m : dense) f(m);
    for (auto& b : biases) f(b);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(functional);
    f(scalar);
    for (const auto& m : dense) f(m);
    for (const auto& b : biases) f(b);
  }

  bool operator==(const NetworkParameters& other) const;
};

/// Fixed rho-hat and W; the filter (I - rho W) is factorized once at construction.
class SpatialContext {
 public:
  SpatialContext(const SpatialWeightMatrix& weights, double rho_hat);

  double rho_hat() const noexcept { return rho_hat_; }
  int size() const noexcept { return filter_->size(); }
  const SpatialFilter& filter() const noexcept { return *filter_; }

 private:
  double rho_hat_;
  std::shared_ptr<const SpatialFilter> filter_;
};

struct TrainConfig {
  double learning_rate = 1e-3;     // zeta
  int batch_size = 32;             // N_b
  int max_epochs = 500;
  double early_stop_threshold = 0.0;  // tau; 0 disables the loss-change rule
  double weight_decay = 0.0;
  double validation_fraction = 0.0;
  int patience = 0;                // epochs without validation improvement; 0 disables
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Uniform Glorot initialization; biases zero.
NetworkParameters init_parameters(const NetworkArchitecture& arch, std::uint64_t seed);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre_activations;  // per hidden layer, n x n_r
  std::vector<Eigen::MatrixXd> activations;      // per hidden layer, n x n_r
};

struct ForwardResult {
  Eigen::VectorXd predictions;
  ForwardCache cache;
};

ForwardResult forward(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                      const Eigen::Ref<const Eigen::MatrixXd>& scalars,
                      const SpatialContext* context = nullptr);

Eigen::VectorXd predict(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                        const Eigen::Ref<const Eigen::MatrixXd>& scalars,
                        const SpatialContext* context = nullptr);

/// Mean squared residual.
double loss(const Eigen::Ref<const Eigen::VectorXd>& predictions, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Exact gradient of the mean squared loss over `rows` (all rows when empty). With a
/// context the forward pass always runs over every row, since the filter couples them.
NetworkParameters gradients(const NetworkParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::MatrixXd>& scalars,
                            const Eigen::Ref<const Eigen::VectorXd>& y, const SpatialContext* context = nullptr,
                            std::span<const int> rows = {});

struct TrainResult {
  NetworkParameters params;
  std::vector<double> loss_trace;        // training loss after each epoch
  std::vector<double> validation_trace;  // empty without a validation split
  int best_epoch = 0;                    // 1-based epoch whose parameters were returned
};

/// Adam over shuffled mini-batches. Stops when |previous epoch loss - epoch loss| < tau
/// (the first epoch compares against 0), on validation patience, or at max_epochs.
/// Throws TrainingDivergedError on a non-finite epoch loss.
TrainResult train(const NetworkArchitecture& arch, const TrainConfig& config,
                  const Eigen::Ref<const Eigen::MatrixXd>& features,
                  const Eigen::Ref<const Eigen::MatrixXd>& scalars, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const SpatialContext* context = nullptr);

/// Versioned text format; values written with 17 significant digits.
void write_parameters(std::ostream& out, const NetworkParameters& params);
NetworkParameters read_parameters(std::istream& in);

}  // namespace sfdnn
