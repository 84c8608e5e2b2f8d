#include "wake/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <string>

#include "wake/errors.hpp"
#include "wake/parallel.hpp"

namespace wake {

namespace {

ConvLayerSpec conv3(std::size_t filters, Activation act) { return ConvLayerSpec::same3x3(filters, act); }

std::span<const double> slice(const std::vector<double>& v, std::size_t off, std::size_t n) {
  return {v.data() + off, n};
}
std::span<double> slice(std::span<double> v, std::size_t off, std::size_t n) {
  return v.subspan(off, n);
}

void require_finite(std::span<const double> values, const char* stage) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteActivation(std::string("non-finite activation after ") + stage);
  }
}

struct Trace {
  Tensor3 input;
  std::vector<Tensor3> enc_in;     // input of each encoder conv
  std::vector<Tensor3> enc_conv;   // output of each encoder conv
  std::vector<PoolResult> enc_pool;
  std::vector<double> flat;
  std::vector<double> latent;
  std::vector<double> bottleneck;
  std::vector<Tensor3> dec_in;     // upsampled input of each decoder conv
  std::vector<Tensor3> dec_conv;
  Tensor3 output;
};

Trace encode_trace(const AeParams& p, const AeLayout& layout, const Tensor3& input) {
  const auto& arch = p.arch;
  Trace t;
  t.input = input;
  const Tensor3* x = &t.input;
  for (std::size_t l = 0; l < arch.encoder_channels.size(); ++l) {
    const auto& slot = layout.encoder_convs[l];
    t.enc_in.push_back(*x);
    t.enc_conv.push_back(conv2d_forward(*x, conv3(arch.encoder_channels[l], Activation::ReLU),
                                        slice(p.weights, slot.weights, slot.weight_count),
                                        slice(p.weights, slot.biases, slot.bias_count)));
    require_finite(t.enc_conv.back().data, "encoder convolution");
    t.enc_pool.push_back(maxpool2_forward(t.enc_conv.back()));
    x = &t.enc_pool.back().output;
  }
  t.flat = x->data;
  const auto& ed = layout.encoder_dense;
  t.latent = dense_forward(t.flat, arch.latent_dim, slice(p.weights, ed.weights, ed.weight_count),
                           slice(p.weights, ed.biases, ed.bias_count), Activation::Identity);
  require_finite(t.latent, "encoder dense layer");
  return t;
}

void decode_trace(const AeParams& p, const AeLayout& layout, Trace& t) {
  const auto& arch = p.arch;
  const auto& dd = layout.decoder_dense;
  t.bottleneck = dense_forward(t.latent, arch.bottleneck_size(), slice(p.weights, dd.weights, dd.weight_count),
                               slice(p.weights, dd.biases, dd.bias_count), Activation::Identity);
  require_finite(t.bottleneck, "decoder dense layer");
  Tensor3 x(arch.bottleneck_channels(), arch.bottleneck_rows(), arch.bottleneck_cols());
  x.data = t.bottleneck;
  for (std::size_t l = 0; l < arch.decoder_channels.size(); ++l) {
    const auto& slot = layout.decoder_convs[l];
    t.dec_in.push_back(upsample_nn(x, 2));
    t.dec_conv.push_back(conv2d_forward(t.dec_in.back(), conv3(arch.decoder_channels[l], Activation::ReLU),
                                        slice(p.weights, slot.weights, slot.weight_count),
                                        slice(p.weights, slot.biases, slot.bias_count)));
    require_finite(t.dec_conv.back().data, "decoder convolution");
    x = t.dec_conv.back();
  }
  const auto& oc = layout.output_conv;
  t.output = conv2d_forward(x, conv3(1, Activation::Identity), slice(p.weights, oc.weights, oc.weight_count),
                            slice(p.weights, oc.biases, oc.bias_count));
  require_finite(t.output.data, "output convolution");
}

void check_params(const AeParams& p) {
  p.arch.validate();
  if (p.weights.size() != p.arch.parameter_count()) {
    throw ShapeMismatch("autoencoder parameter array has " + std::to_string(p.weights.size()) +
                        " entries, architecture needs " + std::to_string(p.arch.parameter_count()));
  }
  if (!p.norm.cell_mean.empty() && p.norm.cell_mean.size() != p.arch.input_size()) {
    throw ShapeMismatch("normalization statistics do not match the grid");
  }
}

std::vector<double> standardized_target(const AeParams& p, const ScanGrid& scan) {
  std::vector<double> t(scan.values);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double mean = p.norm.cell_mean.empty() ? 0.0 : p.norm.cell_mean[i];
    t[i] = (t[i] - mean) / p.norm.scale;
  }
  return t;
}

// Loss and gradient for one scan; grad is overwritten.
double loss_and_gradient(const AeParams& p, const AeLayout& layout, const ScanGrid& scan,
                         std::span<double> grad) {
  const auto& arch = p.arch;
  Trace t = encode_trace(p, layout, ae_prepare_input(p, scan));
  decode_trace(p, layout, t);
  const std::vector<double> target = standardized_target(p, scan);

  std::fill(grad.begin(), grad.end(), 0.0);
  const std::span<double> g = grad;
  const double n = static_cast<double>(arch.input_size());
  double loss = 0.0;
  Tensor3 d_out(1, arch.padded_rows, arch.padded_cols);
  for (std::size_t i = 0; i < arch.grid_rows; ++i) {
    for (std::size_t j = 0; j < arch.grid_cols; ++j) {
      const double r = t.output.at(0, i, j) - target[i * arch.grid_cols + j];
      loss += r * r;
      d_out.at(0, i, j) = 2.0 * r / n;
    }
  }
  loss /= n;

  const Tensor3& last = t.dec_conv.back();
  const auto& oc = layout.output_conv;
  Tensor3 dx = conv2d_backward(last, t.output, conv3(1, Activation::Identity),
                               slice(p.weights, oc.weights, oc.weight_count), d_out,
                               slice(g, oc.weights, oc.weight_count), slice(g, oc.biases, oc.bias_count));
  for (std::size_t l = arch.decoder_channels.size(); l-- > 0;) {
    const auto& slot = layout.decoder_convs[l];
    Tensor3 d_up = conv2d_backward(t.dec_in[l], t.dec_conv[l], conv3(arch.decoder_channels[l], Activation::ReLU),
                                   slice(p.weights, slot.weights, slot.weight_count), dx,
                                   slice(g, slot.weights, slot.weight_count), slice(g, slot.biases, slot.bias_count));
    dx = upsample_nn_backward(d_up, 2);
  }
  const auto& dd = layout.decoder_dense;
  const std::vector<double> d_latent =
      dense_backward(t.latent, t.bottleneck, slice(p.weights, dd.weights, dd.weight_count), dx.data,
                     Activation::Identity, slice(g, dd.weights, dd.weight_count), slice(g, dd.biases, dd.bias_count));
  const auto& ed = layout.encoder_dense;
  const std::vector<double> d_flat =
      dense_backward(t.flat, t.latent, slice(p.weights, ed.weights, ed.weight_count), d_latent,
                     Activation::Identity, slice(g, ed.weights, ed.weight_count), slice(g, ed.biases, ed.bias_count));
  Tensor3 d_pool(arch.bottleneck_channels(), arch.bottleneck_rows(), arch.bottleneck_cols());
  d_pool.data = d_flat;
  for (std::size_t l = arch.encoder_channels.size(); l-- > 0;) {
    const auto& slot = layout.encoder_convs[l];
    const Tensor3 d_conv = maxpool2_backward(d_pool, t.enc_pool[l].argmax, t.enc_conv[l].rows, t.enc_conv[l].cols);
    d_pool = conv2d_backward(t.enc_in[l], t.enc_conv[l], conv3(arch.encoder_channels[l], Activation::ReLU),
                             slice(p.weights, slot.weights, slot.weight_count), d_conv,
                             slice(g, slot.weights, slot.weight_count), slice(g, slot.biases, slot.bias_count));
  }
  return loss;
}

}  // namespace

void AeArchitecture::validate() const {
  if (encoder_channels.empty()) throw ShapeMismatch("encoder needs at least one convolution");
  if (decoder_channels.size() != encoder_channels.size()) {
    throw ShapeMismatch("decoder must mirror the encoder's pooling depth");
  }
  if (latent_dim < 1) throw ShapeMismatch("latent dimension must be positive");
  const std::size_t div = std::size_t{1} << pool_stages();
  if (padded_rows % div != 0 || padded_cols % div != 0) {
    throw ShapeMismatch("padded grid " + std::to_string(padded_rows) + "x" + std::to_string(padded_cols) +
                        " not divisible by " + std::to_string(div));
  }
  if (padded_rows < grid_rows || padded_cols < grid_cols) throw ShapeMismatch("padded grid smaller than scan");
  for (std::size_t c : encoder_channels) {
    if (c == 0) throw ShapeMismatch("zero-width encoder layer");
  }
  for (std::size_t c : decoder_channels) {
    if (c == 0) throw ShapeMismatch("zero-width decoder layer");
  }
}

std::size_t AeArchitecture::parameter_count() const { return AeLayout(*this).total; }

AeLayout::AeLayout(const AeArchitecture& arch) {
  std::size_t off = 0;
  auto take = [&](std::size_t weights, std::size_t biases) {
    Slot s{off, weights, off + weights, biases};
    off += weights + biases;
    return s;
  };
  std::size_t in_ch = 1;
  for (std::size_t c : arch.encoder_channels) {
    encoder_convs.push_back(take(c * in_ch * 9, c));
    in_ch = c;
  }
  encoder_dense = take(arch.latent_dim * arch.bottleneck_size(), arch.latent_dim);
  decoder_dense = take(arch.bottleneck_size() * arch.latent_dim, arch.bottleneck_size());
  in_ch = arch.bottleneck_channels();
  for (std::size_t c : arch.decoder_channels) {
    decoder_convs.push_back(take(c * in_ch * 9, c));
    in_ch = c;
  }
  output_conv = take(in_ch * 9, 1);
  total = off;
}

AeParams AeParams::initialize(const AeArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  AeParams p;
  p.arch = arch;
  p.seed = seed;
  const AeLayout layout(arch);
  p.weights.assign(layout.total, 0.0);
  std::mt19937_64 rng(seed);
  auto fill = [&](const AeLayout::Slot& s, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < s.weight_count; ++i) p.weights[s.weights + i] = dist(rng);
  };
  std::size_t in_ch = 1;
  for (std::size_t l = 0; l < arch.encoder_channels.size(); ++l) {
    fill(layout.encoder_convs[l], in_ch * 9);
    in_ch = arch.encoder_channels[l];
  }
  fill(layout.encoder_dense, arch.bottleneck_size());
  fill(layout.decoder_dense, arch.latent_dim);
  in_ch = arch.bottleneck_channels();
  for (std::size_t l = 0; l < arch.decoder_channels.size(); ++l) {
    fill(layout.decoder_convs[l], in_ch * 9);
    in_ch = arch.decoder_channels[l];
  }
  fill(layout.output_conv, in_ch * 9);
  return p;
}

Tensor3 ae_prepare_input(const AeParams& params, const ScanGrid& scan) {
  const auto& arch = params.arch;
  if (scan.rows != arch.grid_rows || scan.cols != arch.grid_cols || scan.values.size() != arch.input_size()) {
    throw ShapeMismatch("scan is " + std::to_string(scan.rows) + "x" + std::to_string(scan.cols) +
                        ", autoencoder expects " + std::to_string(arch.grid_rows) + "x" +
                        std::to_string(arch.grid_cols));
  }
  if (std::find(scan.mask.begin(), scan.mask.end(), 0) != scan.mask.end()) {
    throw PreconditionViolated("autoencoder input must be imputed (mask all-true)");
  }
  const std::vector<double> t = standardized_target(params, scan);
  Tensor3 x(1, arch.padded_rows, arch.padded_cols);
  for (std::size_t i = 0; i < arch.grid_rows; ++i) {
    std::copy_n(t.begin() + static_cast<std::ptrdiff_t>(i * arch.grid_cols), arch.grid_cols, &x.at(0, i, 0));
  }
  return x;
}

AeOutput ae_forward(const AeParams& params, const ScanGrid& scan) {
  check_params(params);
  const AeLayout layout(params.arch);
  Trace t = encode_trace(params, layout, ae_prepare_input(params, scan));
  decode_trace(params, layout, t);
  AeOutput out;
  out.latent.z = t.latent;
  out.reconstruction = ae_decode(params, out.latent);
  return out;
}

LatentCode ae_encode(const AeParams& params, const ScanGrid& scan) {
  check_params(params);
  const AeLayout layout(params.arch);
  return {encode_trace(params, layout, ae_prepare_input(params, scan)).latent};
}

ScanGrid ae_decode(const AeParams& params, const LatentCode& latent) {
  check_params(params);
  const auto& arch = params.arch;
  if (latent.z.size() != arch.latent_dim) throw ShapeMismatch("latent code has wrong dimension");
  require_finite(latent.z, "latent input");
  const AeLayout layout(arch);
  Trace t;
  t.latent = latent.z;
  decode_trace(params, layout, t);
  ScanGrid s = (arch.grid_rows == kGridRows && arch.grid_cols == kGridCols)
                   ? ScanGrid::default_grid()
                   : ScanGrid::with_shape(arch.grid_rows, arch.grid_cols);
  for (std::size_t i = 0; i < arch.grid_rows; ++i) {
    for (std::size_t j = 0; j < arch.grid_cols; ++j) {
      const std::size_t k = i * arch.grid_cols + j;
      const double mean = params.norm.cell_mean.empty() ? 0.0 : params.norm.cell_mean[k];
      s.values[k] = t.output.at(0, i, j) * params.norm.scale + mean;
    }
  }
  return s;
}

AeGradient ae_backward(const AeParams& params, const ScanGrid& scan) {
  check_params(params);
  const AeLayout layout(params.arch);
  AeGradient g;
  g.grad.assign(layout.total, 0.0);
  g.loss = loss_and_gradient(params, layout, scan, g.grad);
  return g;
}

AeNormalization compute_normalization(std::span<const ScanGrid> scans, const AeArchitecture& arch) {
  if (scans.empty()) throw PreconditionViolated("cannot normalize an empty scan set");
  AeNormalization norm;
  const std::size_t n = arch.input_size();
  norm.cell_mean.assign(n, 0.0);
  for (const auto& s : scans) {
    if (s.values.size() != n) throw ShapeMismatch("scan does not match the autoencoder grid");
    for (std::size_t i = 0; i < n; ++i) norm.cell_mean[i] += s.values[i];
  }
  for (double& m : norm.cell_mean) m /= static_cast<double>(scans.size());
  double ss = 0.0;
  for (const auto& s : scans) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = s.values[i] - norm.cell_mean[i];
      ss += d * d;
    }
  }
  const double sd = std::sqrt(ss / static_cast<double>(scans.size() * n));
  norm.scale = sd > 1e-12 ? sd : 1.0;
  return norm;
}

bool smoothed_loss_settled(std::span<const double> history) {
  const std::size_t window = 5;
  if (history.size() < 2 * window) return true;
  std::vector<double> smooth;
  for (std::size_t e = window - 1; e < history.size(); ++e) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += history[e - k];
    smooth.push_back(s / static_cast<double>(window));
  }
  for (std::size_t e = smooth.size() / 2 + 1; e < smooth.size(); ++e) {
    if (smooth[e] > smooth[e - 1] * (1.0 + 1e-3)) return false;
  }
  return true;
}

AeTrainResult ae_train(std::span<const ScanGrid> scans, const AeTrainConfig& config) {
  if (scans.empty()) throw PreconditionViolated("autoencoder training needs at least one scan");
  AeParams init = AeParams::initialize(config.arch, config.seed);
  init.norm = compute_normalization(scans, config.arch);
  return ae_train_from(scans, config, std::move(init));
}

AeTrainResult ae_train_from(std::span<const ScanGrid> scans, const AeTrainConfig& config, AeParams initial) {
  if (scans.empty()) throw PreconditionViolated("autoencoder training needs at least one scan");
  if (config.batch_size < 1) throw ConfigError("batch size must be positive");
  check_params(initial);
  AeTrainResult result;
  result.params = std::move(initial);
  AeParams& p = result.params;
  const AeLayout layout(p.arch);
  Adam adam(layout.total, config.adam);
  std::mt19937_64 rng(config.seed ^ 0x5EED5EED5EED5EEDULL);

  std::vector<std::size_t> order(scans.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> sample_grad(std::min(config.batch_size, scans.size()),
                                               std::vector<double>(layout.total));
  std::vector<double> sample_loss(sample_grad.size());
  std::vector<double> grad(layout.total);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, order.size() - start);
      try {
        parallel_for(b, [&](std::size_t k) {
          sample_loss[k] = loss_and_gradient(p, layout, scans[order[start + k]], sample_grad[k]);
        });
      } catch (const NonFiniteActivation& e) {
        throw DivergedLoss(std::string("autoencoder training diverged: ") + e.what());
      }
      // Fixed reduction order keeps results independent of the thread count.
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = 0; k < b; ++k) {
        epoch_loss += sample_loss[k];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += sample_grad[k][i];
      }
      for (double& g : grad) g /= static_cast<double>(b);
      adam.step(p.weights, grad);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw DivergedLoss("autoencoder loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
  }
  result.loss_warning = !smoothed_loss_settled(result.loss_history);
  if (result.loss_warning) {
    std::cerr << "warning: autoencoder training loss did not settle over the final half of training\n";
  }
  return result;
}

}  // namespace wake
