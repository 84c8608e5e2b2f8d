#pragma once

// Fully connected ReLU network mapping operating conditions to latent codes.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wake/adam.hpp"

namespace wake {

struct MlpParams {
  std::vector<std::size_t> widths;        // [in, h1, ..., out]
  std::vector<Eigen::MatrixXd> weights;   // layer l: widths[l+1] x widths[l]
  std::vector<Eigen::VectorXd> biases;

  /// Uniform(+-sqrt(1/fan_in)) weights, zero biases.
  static MlpParams initialize(const std::vector<std::size_t>& widths, std::uint64_t seed);
  static MlpParams zeros(const std::vector<std::size_t>& widths);

  std::size_t layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  /// Flat layout per layer: weights row-major, then biases.
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);
  /// Throws ShapeMismatch if consecutive layer shapes disagree.
  void validate() const;
};

/// ReLU on hidden layers, identity on the output layer.
Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& input);
/// Row-wise forward pass: inputs n x in -> n x out.
Eigen::MatrixXd mlp_forward_batch(const MlpParams& p, const Eigen::MatrixXd& inputs);

/// Mean over rows of the squared Euclidean prediction error.
double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct MlpGradient {
  double loss = 0.0;
  std::vector<double> grad;  // flat layout of MlpParams::flatten
};
MlpGradient mlp_gradient(const MlpParams& p, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct MlpTrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct MlpTrainResult {
  MlpParams params;
  std::vector<double> loss_history;
  bool loss_warning = false;
};

/// Trains on already scaled inputs/targets. Throws DivergedLoss on a
/// non-finite loss.
MlpTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                         const MlpTrainConfig& config);
MlpTrainResult mlp_train_from(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                              const MlpTrainConfig& config, MlpParams initial);

/// Network plus the data scaling it was trained with: inputs min-max scaled
/// to [0, 1] by fixed bounds, targets standardized per column.
struct MlpModel {
  MlpParams net;
  Eigen::VectorXd input_lo;
  Eigen::VectorXd input_hi;
  Eigen::VectorXd target_mean;
  Eigen::VectorXd target_sd;
  std::uint64_t seed = 0;

  Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& raw) const;
  /// Raw inputs (n x 7) -> latent predictions in original units (n x k).
  Eigen::MatrixXd predict(const Eigen::MatrixXd& raw) const;
};

struct MlpModelFit {
  MlpModel model;
  std::vector<double> loss_history;
  bool loss_warning = false;
};

/// Fits an MlpModel on raw operating conditions (scaled by the parameter
/// table bounds) and latent targets.
MlpModelFit fit_mlp_model(const Eigen::MatrixXd& raw_params, const Eigen::MatrixXd& latents,
                          const MlpTrainConfig& config);

}  // namespace wake
