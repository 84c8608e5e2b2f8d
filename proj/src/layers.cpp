#include "wake/layers.hpp"

#include <Eigen/Dense>
#include <string>

#include "wake/errors.hpp"

namespace wake {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

// Patch matrix [C*fh*fw, Ho*Wo]; zero where the patch hangs over the padding.
RowMat im2col(const Tensor3& x, const ConvLayerSpec& l, std::size_t out_rows, std::size_t out_cols) {
  const std::size_t k = x.channels * l.filter_rows * l.filter_cols;
  const std::size_t p = out_rows * out_cols;
  RowMat col = RowMat::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t u = 0; u < l.filter_rows; ++u) {
      for (std::size_t v = 0; v < l.filter_cols; ++v) {
        double* dst = col.row(static_cast<Eigen::Index>((c * l.filter_rows + u) * l.filter_cols + v)).data();
        for (std::size_t i = 0; i < out_rows; ++i) {
          const auto src_i = static_cast<std::ptrdiff_t>(i * l.stride + u) -
                             static_cast<std::ptrdiff_t>(l.pad_rows);
          if (src_i < 0 || src_i >= static_cast<std::ptrdiff_t>(x.rows)) continue;
          const double* src = &x.data[(c * x.rows + static_cast<std::size_t>(src_i)) * x.cols];
          double* out = dst + i * out_cols;
          for (std::size_t j = 0; j < out_cols; ++j) {
            const auto src_j = static_cast<std::ptrdiff_t>(j * l.stride + v) -
                               static_cast<std::ptrdiff_t>(l.pad_cols);
            if (src_j >= 0 && src_j < static_cast<std::ptrdiff_t>(x.cols)) out[j] = src[src_j];
          }
        }
      }
    }
  }
  return col;
}

void col2im(const RowMat& col, const ConvLayerSpec& l, std::size_t out_rows, std::size_t out_cols,
            Tensor3& dx) {
  for (std::size_t c = 0; c < dx.channels; ++c) {
    for (std::size_t u = 0; u < l.filter_rows; ++u) {
      for (std::size_t v = 0; v < l.filter_cols; ++v) {
        const double* src = col.row(static_cast<Eigen::Index>((c * l.filter_rows + u) * l.filter_cols + v)).data();
        for (std::size_t i = 0; i < out_rows; ++i) {
          const auto dst_i = static_cast<std::ptrdiff_t>(i * l.stride + u) -
                             static_cast<std::ptrdiff_t>(l.pad_rows);
          if (dst_i < 0 || dst_i >= static_cast<std::ptrdiff_t>(dx.rows)) continue;
          double* dst = &dx.data[(c * dx.rows + static_cast<std::size_t>(dst_i)) * dx.cols];
          const double* in = src + i * out_cols;
          for (std::size_t j = 0; j < out_cols; ++j) {
            const auto dst_j = static_cast<std::ptrdiff_t>(j * l.stride + v) -
                               static_cast<std::ptrdiff_t>(l.pad_cols);
            if (dst_j >= 0 && dst_j < static_cast<std::ptrdiff_t>(dx.cols)) dst[dst_j] += in[j];
          }
        }
      }
    }
  }
}

void check_conv_shapes(const Tensor3& input, const ConvLayerSpec& layer, std::size_t n_weights,
                       std::size_t n_biases) {
  layer.validate(input.rows, input.cols);
  if (n_weights != layer.weight_count(input.channels)) {
    throw ShapeMismatch("conv2d: expected " + std::to_string(layer.weight_count(input.channels)) +
                        " weights, got " + std::to_string(n_weights));
  }
  if (n_biases != layer.filter_count) {
    throw ShapeMismatch("conv2d: expected " + std::to_string(layer.filter_count) + " biases");
  }
  if (input.data.size() != input.channels * input.rows * input.cols) {
    throw ShapeMismatch("conv2d: tensor storage does not match its shape");
  }
}

}  // namespace

void ConvLayerSpec::validate(std::size_t in_rows, std::size_t in_cols) const {
  if (filter_rows % 2 == 0 || filter_cols % 2 == 0) throw ShapeMismatch("conv filter size must be odd");
  if (stride < 1) throw ShapeMismatch("conv stride must be at least 1");
  if (filter_count < 1) throw ShapeMismatch("conv needs at least one filter");
  if (in_rows + 2 * pad_rows < filter_rows || in_cols + 2 * pad_cols < filter_cols) {
    throw ShapeMismatch("conv input smaller than filter");
  }
}

Tensor3 conv2d_forward(const Tensor3& input, const ConvLayerSpec& layer,
                       std::span<const double> weights, std::span<const double> biases) {
  check_conv_shapes(input, layer, weights.size(), biases.size());
  const std::size_t ho = layer.output_rows(input.rows);
  const std::size_t wo = layer.output_cols(input.cols);
  const auto k = static_cast<Eigen::Index>(layer.weight_count(input.channels) / layer.filter_count);
  const auto f = static_cast<Eigen::Index>(layer.filter_count);
  const auto p = static_cast<Eigen::Index>(ho * wo);

  const RowMat col = im2col(input, layer, ho, wo);
  Tensor3 out(layer.filter_count, ho, wo);
  RowMap y(out.data.data(), f, p);
  y.noalias() = ConstRowMap(weights.data(), f, k) * col;
  for (Eigen::Index h = 0; h < f; ++h) y.row(h).array() += biases[static_cast<std::size_t>(h)];
  if (layer.activation == Activation::ReLU) y = y.cwiseMax(0.0);
  return out;
}

Tensor3 conv2d_backward(const Tensor3& input, const Tensor3& output, const ConvLayerSpec& layer,
                        std::span<const double> weights, const Tensor3& grad_output,
                        std::span<double> grad_weights, std::span<double> grad_biases) {
  check_conv_shapes(input, layer, weights.size(), grad_biases.size());
  if (grad_weights.size() != weights.size()) throw ShapeMismatch("conv2d: gradient buffer size");
  if (!grad_output.same_shape(output)) throw ShapeMismatch("conv2d: gradient/output shape mismatch");
  const std::size_t ho = output.rows;
  const std::size_t wo = output.cols;
  const auto k = static_cast<Eigen::Index>(layer.weight_count(input.channels) / layer.filter_count);
  const auto f = static_cast<Eigen::Index>(layer.filter_count);
  const auto p = static_cast<Eigen::Index>(ho * wo);

  RowMat dz = ConstRowMap(grad_output.data.data(), f, p);
  if (layer.activation == Activation::ReLU) {
    dz = (ConstRowMap(output.data.data(), f, p).array() > 0.0).select(dz, 0.0);
  }
  const RowMat col = im2col(input, layer, ho, wo);
  RowMap(grad_weights.data(), f, k).noalias() += dz * col.transpose();
  for (Eigen::Index h = 0; h < f; ++h) grad_biases[static_cast<std::size_t>(h)] += dz.row(h).sum();

  const RowMat dcol = ConstRowMap(weights.data(), f, k).transpose() * dz;
  Tensor3 dx(input.channels, input.rows, input.cols);
  col2im(dcol, layer, ho, wo, dx);
  return dx;
}

PoolResult maxpool2_forward(const Tensor3& input) {
  if (input.rows % 2 != 0 || input.cols % 2 != 0) {
    throw ShapeMismatch("maxpool2 needs even spatial dimensions, got " + std::to_string(input.rows) +
                        "x" + std::to_string(input.cols));
  }
  PoolResult r{Tensor3(input.channels, input.rows / 2, input.cols / 2), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t c = 0; c < input.channels; ++c) {
    for (std::size_t i = 0; i < r.output.rows; ++i) {
      for (std::size_t j = 0; j < r.output.cols; ++j, ++o) {
        double best = input.at(c, 2 * i, 2 * j);
        std::uint8_t pos = 0;
        for (std::uint8_t q = 1; q < 4; ++q) {
          const double v = input.at(c, 2 * i + q / 2, 2 * j + q % 2);
          if (v > best) {
            best = v;
            pos = q;
          }
        }
        r.output.data[o] = best;
        r.argmax[o] = pos;
      }
    }
  }
  return r;
}

Tensor3 maxpool2_backward(const Tensor3& grad_output, const std::vector<std::uint8_t>& argmax,
                          std::size_t in_rows, std::size_t in_cols) {
  if (argmax.size() != grad_output.size() || in_rows != 2 * grad_output.rows ||
      in_cols != 2 * grad_output.cols) {
    throw ShapeMismatch("maxpool2 backward: shape mismatch");
  }
  Tensor3 dx(grad_output.channels, in_rows, in_cols);
  std::size_t o = 0;
  for (std::size_t c = 0; c < grad_output.channels; ++c) {
    for (std::size_t i = 0; i < grad_output.rows; ++i) {
      for (std::size_t j = 0; j < grad_output.cols; ++j, ++o) {
        const std::uint8_t q = argmax[o];
        dx.at(c, 2 * i + q / 2, 2 * j + q % 2) += grad_output.data[o];
      }
    }
  }
  return dx;
}

Tensor3 upsample_nn(const Tensor3& input, std::size_t factor) {
  if (factor < 2) throw ShapeMismatch("upsample factor must be at least 2");
  Tensor3 out(input.channels, input.rows * factor, input.cols * factor);
  for (std::size_t c = 0; c < out.channels; ++c) {
    for (std::size_t i = 0; i < out.rows; ++i) {
      for (std::size_t j = 0; j < out.cols; ++j) out.at(c, i, j) = input.at(c, i / factor, j / factor);
    }
  }
  return out;
}

Tensor3 upsample_nn_backward(const Tensor3& grad_output, std::size_t factor) {
  if (factor < 2 || grad_output.rows % factor != 0 || grad_output.cols % factor != 0) {
    throw ShapeMismatch("upsample backward: shape not divisible by factor");
  }
  Tensor3 dx(grad_output.channels, grad_output.rows / factor, grad_output.cols / factor);
  for (std::size_t c = 0; c < grad_output.channels; ++c) {
    for (std::size_t i = 0; i < grad_output.rows; ++i) {
      for (std::size_t j = 0; j < grad_output.cols; ++j) {
        dx.at(c, i / factor, j / factor) += grad_output.at(c, i, j);
      }
    }
  }
  return dx;
}

std::vector<double> dense_forward(std::span<const double> input, std::size_t out_dim,
                                  std::span<const double> weights, std::span<const double> biases,
                                  Activation act) {
  if (weights.size() != out_dim * input.size() || biases.size() != out_dim) {
    throw ShapeMismatch("dense: parameter shape mismatch");
  }
  std::vector<double> out(out_dim);
  Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Eigen::Index>(out_dim));
  y.noalias() = ConstRowMap(weights.data(), static_cast<Eigen::Index>(out_dim),
                            static_cast<Eigen::Index>(input.size())) *
                Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  y += Eigen::Map<const Eigen::VectorXd>(biases.data(), static_cast<Eigen::Index>(out_dim));
  if (act == Activation::ReLU) y = y.cwiseMax(0.0);
  return out;
}

std::vector<double> dense_backward(std::span<const double> input, std::span<const double> output,
                                   std::span<const double> weights, std::span<const double> grad_output,
                                   Activation act, std::span<double> grad_weights,
                                   std::span<double> grad_biases) {
  const auto n_out = static_cast<Eigen::Index>(output.size());
  const auto n_in = static_cast<Eigen::Index>(input.size());
  if (grad_output.size() != output.size() || weights.size() != output.size() * input.size() ||
      grad_weights.size() != weights.size() || grad_biases.size() != output.size()) {
    throw ShapeMismatch("dense backward: shape mismatch");
  }
  Eigen::VectorXd dz = Eigen::Map<const Eigen::VectorXd>(grad_output.data(), n_out);
  if (act == Activation::ReLU) {
    for (Eigen::Index i = 0; i < n_out; ++i) {
      if (!(output[static_cast<std::size_t>(i)] > 0.0)) dz(i) = 0.0;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> x(input.data(), n_in);
  RowMap(grad_weights.data(), n_out, n_in).noalias() += dz * x.transpose();
  Eigen::Map<Eigen::VectorXd>(grad_biases.data(), n_out) += dz;
  std::vector<double> dx(input.size());
  Eigen::Map<Eigen::VectorXd>(dx.data(), n_in).noalias() =
      ConstRowMap(weights.data(), n_out, n_in).transpose() * dz;
  return dx;
}

}  // namespace wake
