#pragma once

// Convolutional autoencoder: scan (61 x 41, zero-padded to 64 x 44) to a
// k-dimensional latent code and back.
//
//   encoder: [conv3x3(c_l, ReLU) -> maxpool2] for each c_l, flatten, dense -> k
//   decoder: dense k -> bottleneck, [upsample2 -> conv3x3(d_l, ReLU)] for
//            each d_l, conv3x3(1, identity), crop
//
// Scans are standardized before encoding (per-cell mean, one global scale)
// and the inverse transform is applied to decoder output.

#include <cstdint>
#include <span>
#include <vector>

#include "wake/adam.hpp"
#include "wake/layers.hpp"
#include "wake/wakegen.hpp"

namespace wake {

struct AeArchitecture {
  std::size_t grid_rows = kGridRows;
  std::size_t grid_cols = kGridCols;
  std::size_t padded_rows = 64;
  std::size_t padded_cols = 44;
  std::vector<std::size_t> encoder_channels{8, 16};
  std::vector<std::size_t> decoder_channels{8, 8};
  std::size_t latent_dim = 4;

  /// Throws ShapeMismatch when the padded grid cannot be pooled down
  /// evenly or the decoder does not mirror the encoder depth.
  void validate() const;
  std::size_t pool_stages() const { return encoder_channels.size(); }
  std::size_t bottleneck_rows() const { return padded_rows >> pool_stages(); }
  std::size_t bottleneck_cols() const { return padded_cols >> pool_stages(); }
  std::size_t bottleneck_channels() const { return encoder_channels.back(); }
  std::size_t bottleneck_size() const {
    return bottleneck_rows() * bottleneck_cols() * bottleneck_channels();
  }
  std::size_t input_size() const { return grid_rows * grid_cols; }
  std::size_t parameter_count() const;

  bool operator==(const AeArchitecture&) const = default;
};

/// Offsets of each layer's weights and biases inside the flat parameter array.
struct AeLayout {
  struct Slot {
    std::size_t weights = 0;
    std::size_t weight_count = 0;
    std::size_t biases = 0;
    std::size_t bias_count = 0;
  };
  std::vector<Slot> encoder_convs;
  Slot encoder_dense;
  Slot decoder_dense;
  std::vector<Slot> decoder_convs;
  Slot output_conv;
  std::size_t total = 0;

  explicit AeLayout(const AeArchitecture& arch);
};

struct AeNormalization {
  std::vector<double> cell_mean;  // empty means zero mean
  double scale = 1.0;
};

struct AeParams {
  AeArchitecture arch;
  std::vector<double> weights;
  AeNormalization norm;
  std::uint64_t seed = 0;

  /// Fan-in scaled uniform initialization, zero biases.
  static AeParams initialize(const AeArchitecture& arch, std::uint64_t seed);
};

struct LatentCode {
  std::vector<double> z;
};

struct AeOutput {
  LatentCode latent;
  ScanGrid reconstruction;  // physical units, grid shape
};

/// Standardized, zero-padded single-channel input tensor.
Tensor3 ae_prepare_input(const AeParams& params, const ScanGrid& scan);

AeOutput ae_forward(const AeParams& params, const ScanGrid& scan);
LatentCode ae_encode(const AeParams& params, const ScanGrid& scan);
ScanGrid ae_decode(const AeParams& params, const LatentCode& latent);

struct AeGradient {
  double loss = 0.0;  // mean squared error over the grid, standardized units
  std::vector<double> grad;
};

/// Exact gradient of the reconstruction loss with respect to every parameter.
AeGradient ae_backward(const AeParams& params, const ScanGrid& scan);

struct AeTrainConfig {
  AeArchitecture arch;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct AeTrainResult {
  AeParams params;
  std::vector<double> loss_history;  // per-epoch mean training loss
  bool loss_warning = false;         // smoothed loss rose in the final half
};

AeNormalization compute_normalization(std::span<const ScanGrid> scans, const AeArchitecture& arch);

/// Minibatch Adam training. Throws DivergedLoss on a non-finite loss.
AeTrainResult ae_train(std::span<const ScanGrid> scans, const AeTrainConfig& config);

/// As above, continuing from `initial` (normalization is kept).
AeTrainResult ae_train_from(std::span<const ScanGrid> scans, const AeTrainConfig& config,
                            AeParams initial);

/// True when the 5-epoch moving average of the second half of `history`
/// never increases by more than a relative 1e-3.
bool smoothed_loss_settled(std::span<const double> history);

}  // namespace wake
