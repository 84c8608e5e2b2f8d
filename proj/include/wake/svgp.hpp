#pragma once

// Sparse GP with the collapsed variational bound:
//
//   F = log N(y | 0, Q + s I) - tr(K_nn - Q) / (2 s),  Q = K_nm K_mm^{-1} K_mn
//
// evaluated in O(n m^2) through the m x m matrix I + A A^T with
// A = L_m^{-1} K_mn / sqrt(s). Inducing inputs are free parameters.

#include <Eigen/Dense>
#include <cstdint>

#include "wake/gp.hpp"
#include "wake/kernel.hpp"
#include "wake/lbfgs.hpp"

namespace wake {

/// Starting jitter on K_mm; escalated by 100x up to kGpMaxJitter. Kept
/// small because any jitter loosens the bound.
inline constexpr double kSvgpJitter = 1e-10;

struct ElboGradient {
  double dlog_lengthscale = 0.0;
  double dlog_noise = 0.0;
  Eigen::MatrixXd dinducing;  // m x d
};

/// Collapsed bound with a fixed jitter on K_mm. Throws CholeskyFailure.
double svgp_elbo(const Matern32& kernel, double noise_variance, const Eigen::MatrixXd& inducing,
                 const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double jitter = kSvgpJitter);

/// Bound and its analytic gradient.
double svgp_elbo_grad(const Matern32& kernel, double noise_variance,
                      const Eigen::MatrixXd& inducing, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& y, double jitter, ElboGradient& grad);

class SvgpModel {
 public:
  SvgpModel() = default;

  /// Caches the factorizations needed for prediction.
  static SvgpModel assemble(Eigen::MatrixXd inducing, Eigen::MatrixXd inputs,
                            Eigen::VectorXd targets, const GpHyper& hyper);

  GpPrediction predict(const Eigen::MatrixXd& points) const;
  double elbo() const { return elbo_; }

  const GpHyper& hyper() const { return hyper_; }
  Matern32 kernel() const { return Matern32{hyper_.lengthscale}; }
  const Eigen::MatrixXd& inducing() const { return inducing_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  double jitter() const { return jitter_; }

 private:
  GpHyper hyper_;
  Eigen::MatrixXd inducing_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::MatrixXd chol_m_;   // K_mm + jitter I
  Eigen::MatrixXd chol_b_;   // I + A A^T
  Eigen::VectorXd weights_;  // mean = (L_m^{-1} k_m*)^T weights_
  double jitter_ = 0.0;
  double elbo_ = 0.0;
};

struct SvgpFitConfig {
  std::size_t inducing = 64;
  std::size_t starts = 2;
  std::uint64_t seed = 0;
  bool optimize_inducing = true;
  double start_lengthscale_lo = 1e-1;
  double start_lengthscale_hi = 1e1;
  double start_noise_lo = 1e-4;
  double start_noise_hi = 1e-1;
  double lengthscale_lo = 1e-2;
  double lengthscale_hi = 1e2;
  double noise_lo = 1e-6;
  double noise_hi = 1e1;
  LbfgsOptions optimizer;
};

/// Maximizes the bound over (log l, log s, inducing inputs). The first start
/// uses `init`; inducing inputs start at a seeded random subset of the
/// training inputs, or at `initial_inducing` when it is non-empty. Inducing
/// inputs stay inside the bounding box of the training inputs.
SvgpModel svgp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& init,
                   const SvgpFitConfig& config = {},
                   const Eigen::MatrixXd& initial_inducing = Eigen::MatrixXd());

/// Sparse GP on one latent dimension, raw units on both ends.
struct SvgpRegressor {
  InputScaler input;
  TargetScaler target;
  SvgpModel gp;

  GpPrediction predict(const Eigen::MatrixXd& raw_points) const;
};

SvgpRegressor fit_svgp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                 const SvgpFitConfig& config = {}, const GpHyper& init = {});

/// Rebuilds a regressor from stored scalers, hyperparameters and
/// standardized inducing inputs.
SvgpRegressor assemble_svgp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                      const InputScaler& input, const TargetScaler& target,
                                      const GpHyper& hyper, const Eigen::MatrixXd& inducing);

}  // namespace wake
