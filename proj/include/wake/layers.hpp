#pragma once

// Forward and reverse-mode primitives for the convolutional autoencoder.
// Tensors are [channels, rows, cols] in row-major order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wake {

struct Tensor3 {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), rows(h), cols(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t i, std::size_t j) { return data[(c * rows + i) * cols + j]; }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return data[(c * rows + i) * cols + j];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor3& o) const {
    return channels == o.channels && rows == o.rows && cols == o.cols;
  }
  bool operator==(const Tensor3&) const = default;
};

enum class Activation { Identity, ReLU };

struct ConvLayerSpec {
  std::size_t filter_count = 1;
  std::size_t filter_rows = 3;
  std::size_t filter_cols = 3;
  std::size_t stride = 1;
  std::size_t pad_rows = 1;
  std::size_t pad_cols = 1;
  Activation activation = Activation::ReLU;

  /// Same-size 3x3 convolution.
  static ConvLayerSpec same3x3(std::size_t filters, Activation act) {
    return {filters, 3, 3, 1, 1, 1, act};
  }
  std::size_t weight_count(std::size_t in_channels) const {
    return filter_count * in_channels * filter_rows * filter_cols;
  }
  std::size_t output_rows(std::size_t in_rows) const {
    return (in_rows + 2 * pad_rows - filter_rows) / stride + 1;
  }
  std::size_t output_cols(std::size_t in_cols) const {
    return (in_cols + 2 * pad_cols - filter_cols) / stride + 1;
  }
  /// Throws ShapeMismatch for even filters, zero stride or an input smaller
  /// than the filter.
  void validate(std::size_t in_rows, std::size_t in_cols) const;
};

/// y[h,i,j] = act(sum_c sum_u sum_v w[h,c,u,v] * x_pad[c, i*s+u, j*s+v] + b[h]).
/// Weights are laid out [filter][channel][u][v].
Tensor3 conv2d_forward(const Tensor3& input, const ConvLayerSpec& layer,
                       std::span<const double> weights, std::span<const double> biases);

/// Backpropagates through conv2d_forward. `output` is the forward result
/// (the ReLU mask is read from it). Parameter gradients are accumulated
/// into grad_weights / grad_biases; the input gradient is returned.
Tensor3 conv2d_backward(const Tensor3& input, const Tensor3& output, const ConvLayerSpec& layer,
                        std::span<const double> weights, const Tensor3& grad_output,
                        std::span<double> grad_weights, std::span<double> grad_biases);

struct PoolResult {
  Tensor3 output;
  /// Position of the max inside each 2x2 window, encoded as 2*di + dj.
  /// Ties go to the first position in row-major order.
  std::vector<std::uint8_t> argmax;
};

PoolResult maxpool2_forward(const Tensor3& input);
Tensor3 maxpool2_backward(const Tensor3& grad_output, const std::vector<std::uint8_t>& argmax,
                          std::size_t in_rows, std::size_t in_cols);

Tensor3 upsample_nn(const Tensor3& input, std::size_t factor);
/// Sums the gradient over each replicated factor x factor block.
Tensor3 upsample_nn_backward(const Tensor3& grad_output, std::size_t factor);

/// y = act(W x + b) with W stored row-major [out][in].
std::vector<double> dense_forward(std::span<const double> input, std::size_t out_dim,
                                  std::span<const double> weights, std::span<const double> biases,
                                  Activation act);
std::vector<double> dense_backward(std::span<const double> input, std::span<const double> output,
                                   std::span<const double> weights, std::span<const double> grad_output,
                                   Activation act, std::span<double> grad_weights,
                                   std::span<double> grad_biases);

}  // namespace wake
