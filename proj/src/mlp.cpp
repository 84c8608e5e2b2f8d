#include "wake/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <string>

#include "wake/autoencoder.hpp"
#include "wake/errors.hpp"
#include "wake/wakegen.hpp"

namespace wake {

MlpParams MlpParams::zeros(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ShapeMismatch("MLP needs at least an input and an output width");
  MlpParams p;
  p.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(widths[l + 1]),
                                              static_cast<Eigen::Index>(widths[l])));
    p.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(widths[l + 1])));
  }
  return p;
}

MlpParams MlpParams::initialize(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  MlpParams p = zeros(widths);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const double bound = std::sqrt(1.0 / static_cast<double>(widths[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& w = p.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layers(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < layers(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) flat.push_back(w(i, j));
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat.push_back(biases[l](i));
  }
  return flat;
}

void MlpParams::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) throw ShapeMismatch("MLP parameter array has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    auto& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat[k++];
    }
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l](i) = flat[k++];
  }
}

void MlpParams::validate() const {
  if (widths.size() < 2 || weights.size() != widths.size() - 1 || biases.size() != weights.size()) {
    throw ShapeMismatch("MLP layer list is inconsistent with its widths");
  }
  for (std::size_t l = 0; l < layers(); ++l) {
    if (static_cast<std::size_t>(weights[l].rows()) != widths[l + 1] ||
        static_cast<std::size_t>(weights[l].cols()) != widths[l] ||
        static_cast<std::size_t>(biases[l].size()) != widths[l + 1]) {
      throw ShapeMismatch("MLP layer " + std::to_string(l) + " has incompatible shape");
    }
  }
}

namespace {

// Column-per-sample activations of every layer (index 0 is the input).
std::vector<Eigen::MatrixXd> forward_columns(const MlpParams& p, const Eigen::MatrixXd& x_cols) {
  std::vector<Eigen::MatrixXd> t{x_cols};
  for (std::size_t l = 0; l < p.layers(); ++l) {
    Eigen::MatrixXd z = p.weights[l] * t.back();
    z.colwise() += p.biases[l];
    if (l + 1 < p.layers()) z = z.cwiseMax(0.0);
    t.push_back(std::move(z));
  }
  return t;
}

void check_batch(const MlpParams& p, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd* targets) {
  p.validate();
  if (static_cast<std::size_t>(inputs.cols()) != p.widths.front()) {
    throw ShapeMismatch("MLP input has " + std::to_string(inputs.cols()) + " columns, expected " +
                        std::to_string(p.widths.front()));
  }
  if (targets && (targets->rows() != inputs.rows() ||
                  static_cast<std::size_t>(targets->cols()) != p.widths.back())) {
    throw ShapeMismatch("MLP target shape mismatch");
  }
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& input) {
  p.validate();
  if (static_cast<std::size_t>(input.size()) != p.widths.front()) {
    throw ShapeMismatch("MLP input has the wrong dimension");
  }
  Eigen::VectorXd t = input;
  for (std::size_t l = 0; l < p.layers(); ++l) {
    Eigen::VectorXd z = p.weights[l] * t + p.biases[l];
    t = (l + 1 < p.layers()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return t;
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& p, const Eigen::MatrixXd& inputs) {
  check_batch(p, inputs, nullptr);
  return forward_columns(p, inputs.transpose()).back().transpose();
}

double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_batch(p, inputs, &targets);
  if (inputs.rows() == 0) throw PreconditionViolated("MLP loss needs a non-empty batch");
  const Eigen::MatrixXd pred = mlp_forward_batch(p, inputs);
  return (pred - targets).rowwise().squaredNorm().mean();
}

MlpGradient mlp_gradient(const MlpParams& p, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_batch(p, inputs, &targets);
  if (inputs.rows() == 0) throw PreconditionViolated("MLP gradient needs a non-empty batch");
  const double n = static_cast<double>(inputs.rows());
  const auto t = forward_columns(p, inputs.transpose());
  const Eigen::MatrixXd residual = t.back() - targets.transpose();
  MlpGradient g;
  g.loss = residual.colwise().squaredNorm().sum() / n;

  std::vector<Eigen::MatrixXd> dw(p.layers());
  std::vector<Eigen::VectorXd> db(p.layers());
  Eigen::MatrixXd delta = (2.0 / n) * residual;
  for (std::size_t l = p.layers(); l-- > 0;) {
    dw[l] = delta * t[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (p.weights[l].transpose() * delta).cwiseProduct(
          (t[l].array() > 0.0).cast<double>().matrix());
    }
  }
  g.grad.reserve(p.parameter_count());
  for (std::size_t l = 0; l < p.layers(); ++l) {
    for (Eigen::Index i = 0; i < dw[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < dw[l].cols(); ++j) g.grad.push_back(dw[l](i, j));
    }
    for (Eigen::Index i = 0; i < db[l].size(); ++i) g.grad.push_back(db[l](i));
  }
  return g;
}

MlpTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                         const MlpTrainConfig& config) {
  std::vector<std::size_t> widths{static_cast<std::size_t>(inputs.cols())};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<std::size_t>(targets.cols()));
  return mlp_train_from(inputs, targets, config, MlpParams::initialize(widths, config.seed));
}

MlpTrainResult mlp_train_from(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                              const MlpTrainConfig& config, MlpParams initial) {
  if (inputs.rows() < 1) throw PreconditionViolated("MLP training needs at least one pair");
  if (config.batch_size < 1) throw ConfigError("batch size must be positive");
  check_batch(initial, inputs, &targets);
  MlpTrainResult result;
  result.params = std::move(initial);
  std::vector<double> flat = result.params.flatten();
  Adam adam(flat.size(), config.adam);
  std::mt19937_64 rng(config.seed ^ 0x3C3C3C3C3C3C3C3CULL);
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, n - start);
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(b), inputs.cols());
      Eigen::MatrixXd yb(static_cast<Eigen::Index>(b), targets.cols());
      for (std::size_t k = 0; k < b; ++k) {
        xb.row(static_cast<Eigen::Index>(k)) = inputs.row(order[start + k]);
        yb.row(static_cast<Eigen::Index>(k)) = targets.row(order[start + k]);
      }
      const MlpGradient g = mlp_gradient(result.params, xb, yb);
      epoch_loss += g.loss * static_cast<double>(b);
      adam.step(flat, g.grad);
      result.params.assign(flat);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw DivergedLoss("MLP loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
  }
  result.loss_warning = !smoothed_loss_settled(result.loss_history);
  if (result.loss_warning) {
    std::cerr << "warning: MLP training loss did not settle over the final half of training\n";
  }
  return result;
}

Eigen::MatrixXd MlpModel::scale_inputs(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != input_lo.size()) throw ShapeMismatch("MLP model input width mismatch");
  Eigen::MatrixXd x = raw;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    x.col(d) = (x.col(d).array() - input_lo(d)) / (input_hi(d) - input_lo(d));
  }
  return x;
}

Eigen::MatrixXd MlpModel::predict(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd y = mlp_forward_batch(net, scale_inputs(raw));
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    y.col(k) = y.col(k).array() * target_sd(k) + target_mean(k);
  }
  return y;
}

MlpModelFit fit_mlp_model(const Eigen::MatrixXd& raw_params, const Eigen::MatrixXd& latents,
                          const MlpTrainConfig& config) {
  if (raw_params.rows() != latents.rows()) throw ShapeMismatch("params/latents row count mismatch");
  if (raw_params.cols() != static_cast<Eigen::Index>(kParamDim)) {
    throw ShapeMismatch("MLP model expects 7 operating-condition columns");
  }
  if (latents.rows() < 1) throw PreconditionViolated("MLP training needs at least one pair");
  MlpModelFit fit;
  MlpModel& m = fit.model;
  m.seed = config.seed;
  m.input_lo = Eigen::Map<const Eigen::VectorXd>(ParamVector::lower_bounds().data(), kParamDim);
  m.input_hi = Eigen::Map<const Eigen::VectorXd>(ParamVector::upper_bounds().data(), kParamDim);
  m.target_mean = latents.colwise().mean().transpose();
  m.target_sd.resize(latents.cols());
  for (Eigen::Index k = 0; k < latents.cols(); ++k) {
    const double var = (latents.col(k).array() - m.target_mean(k)).square().mean();
    m.target_sd(k) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Eigen::MatrixXd targets = latents;
  for (Eigen::Index k = 0; k < targets.cols(); ++k) {
    targets.col(k) = (targets.col(k).array() - m.target_mean(k)) / m.target_sd(k);
  }
  MlpTrainResult r = mlp_train(m.scale_inputs(raw_params), targets, config);
  m.net = std::move(r.params);
  fit.loss_history = std::move(r.loss_history);
  fit.loss_warning = r.loss_warning;
  return fit;
}

}  // namespace wake
