#pragma once

// Exact zero-mean GP regression with a unit-variance Matern-3/2 kernel.
// Hyperparameters are the lengthscale and the noise variance; inputs and
// targets are standardized by the caller (see GpRegressor).

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wake/kernel.hpp"
#include "wake/lbfgs.hpp"

namespace wake {

inline constexpr double kGpJitter = 1e-6;
inline constexpr double kGpMaxJitter = 1e-4;

struct GpHyper {
  double lengthscale = 1.0;
  double noise_variance = 1e-2;
};

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Lower Cholesky factor of a + jitter*I, escalating jitter by 10x from
/// `jitter` up to kGpMaxJitter. Returns the jitter actually used.
double cholesky_with_jitter(const Eigen::MatrixXd& a, double jitter, Eigen::MatrixXd& chol);

class GpModel {
 public:
  GpModel() = default;

  /// Factorizes K + noise*I (+ jitter). Throws CholeskyFailure.
  static GpModel assemble(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const GpHyper& hyper,
                          double jitter = kGpJitter);

  GpPrediction predict(const Eigen::MatrixXd& points) const;
  double loglik() const;

  const GpHyper& hyper() const { return hyper_; }
  Matern32 kernel() const { return Matern32{hyper_.lengthscale}; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  /// Diagonal term a new observation would receive: noise plus jitter.
  double effective_noise() const { return hyper_.noise_variance + jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }

  /// L^{-1} k(X, points), n x points.rows().
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& points) const;

 private:
  GpHyper hyper_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// log N(y | 0, K + noise*I + jitter*I) with a fixed jitter.
double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const GpHyper& hyper, double jitter = kGpJitter);

/// Value and gradient with respect to (log lengthscale, log noise variance).
double log_marginal_likelihood_grad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const GpHyper& hyper, double jitter,
                                    Eigen::Vector2d& grad);

struct GpFitConfig {
  std::size_t starts = 8;          // the initial guess counts as the first start
  std::uint64_t seed = 0;
  double start_lengthscale_lo = 1e-2;
  double start_lengthscale_hi = 1e1;
  double start_noise_lo = 1e-6;
  double start_noise_hi = 1.0;
  double lengthscale_lo = 1e-2;
  double lengthscale_hi = 1e2;
  double noise_lo = 1e-6;
  double noise_hi = 1e1;
  LbfgsOptions optimizer;
};

/// Multi-start maximum likelihood. Throws NonFiniteLikelihood when no start
/// yields a finite likelihood, CholeskyFailure from the final assembly.
GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& init,
               const GpFitConfig& config = {});

/// Per-column z-score of raw inputs. Zero-spread columns keep unit scale.
struct InputScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;

  static InputScaler fit(const Eigen::MatrixXd& raw);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& raw) const;
};

struct TargetScaler {
  double mean = 0.0;
  double sd = 1.0;

  static TargetScaler fit(const Eigen::VectorXd& raw);
  Eigen::VectorXd transform(const Eigen::VectorXd& raw) const;
};

/// GP on one latent dimension, in raw units on both ends.
struct GpRegressor {
  InputScaler input;
  TargetScaler target;
  GpModel gp;

  /// Mean and variance in raw target units.
  GpPrediction predict(const Eigen::MatrixXd& raw_points) const;
};

GpRegressor fit_gp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                             const GpFitConfig& config = {}, const GpHyper& init = {});

/// Rebuilds a regressor from stored scalers and hyperparameters.
GpRegressor assemble_gp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                  const InputScaler& input, const TargetScaler& target,
                                  const GpHyper& hyper);

}  // namespace wake
