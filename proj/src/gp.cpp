#include "wake/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "wake/errors.hpp"

namespace wake {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw ShapeMismatch("GP inputs and targets differ in length");
  if (x.rows() == 0) throw PreconditionViolated("GP needs at least one training point");
}

// Likelihood on precomputed pairwise distances; grad (if non-null) is with
// respect to (log lengthscale, log noise variance).
double lml_from_distances(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, const GpHyper& h,
                          double jitter, Eigen::Vector2d* grad) {
  const Matern32 k{h.lengthscale};
  Eigen::MatrixXd kmat = k.from_distances(dist);
  kmat.diagonal().array() += h.noise_variance + jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(kmat);
  if (llt.info() != Eigen::Success) throw CholeskyFailure("covariance matrix is not positive definite");
  const Eigen::MatrixXd& l = llt.matrixLLT();
  const Eigen::VectorXd alpha = llt.solve(y);
  const auto n = static_cast<double>(y.size());
  const double value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
  if (grad) {
    Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(y.size(), y.size()));
    w = alpha * alpha.transpose() - w;
    const Eigen::MatrixXd dk = dist.unaryExpr([&k](double r) { return k.dlog_lengthscale(r); });
    (*grad)(0) = 0.5 * w.cwiseProduct(dk).sum();
    (*grad)(1) = 0.5 * w.trace() * h.noise_variance;
  }
  return value;
}

}  // namespace

double cholesky_with_jitter(const Eigen::MatrixXd& a, double jitter, Eigen::MatrixXd& chol) {
  for (double j = jitter; j <= kGpMaxJitter * (1.0 + 1e-9); j = j > 0.0 ? 10.0 * j : kGpJitter) {
    Eigen::MatrixXd m = a;
    m.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
      chol = llt.matrixL();
      return j;
    }
  }
  throw CholeskyFailure("factorization failed after jitter escalation to " +
                        std::to_string(kGpMaxJitter));
}

GpModel GpModel::assemble(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const GpHyper& hyper,
                          double jitter) {
  check_data(inputs, targets);
  if (!(hyper.lengthscale > 0.0) || !(hyper.noise_variance >= 0.0))
    throw PreconditionViolated("GP hyperparameters out of range");
  GpModel m;
  m.hyper_ = hyper;
  Eigen::MatrixXd k = m.kernel().gram(inputs);
  k.diagonal().array() += hyper.noise_variance;
  m.jitter_ = cholesky_with_jitter(k, jitter, m.chol_);
  m.alpha_ = m.chol_.transpose().triangularView<Eigen::Upper>().solve(
      m.chol_.triangularView<Eigen::Lower>().solve(targets));
  m.inputs_ = std::move(inputs);
  m.targets_ = std::move(targets);
  return m;
}

Eigen::MatrixXd GpModel::whiten(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd ks = kernel().cross(inputs_, points);
  chol_.triangularView<Eigen::Lower>().solveInPlace(ks);
  return ks;
}

GpPrediction GpModel::predict(const Eigen::MatrixXd& points) const {
  const Eigen::MatrixXd ks = kernel().cross(inputs_, points);
  GpPrediction out;
  out.mean = ks.transpose() * alpha_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  out.variance = (1.0 - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  return out;
}

double GpModel::loglik() const {
  const auto n = static_cast<double>(targets_.size());
  return -0.5 * targets_.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const GpHyper& hyper, double jitter) {
  check_data(x, y);
  return lml_from_distances(pairwise_distances(x, x), y, hyper, jitter, nullptr);
}

double log_marginal_likelihood_grad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const GpHyper& hyper, double jitter, Eigen::Vector2d& grad) {
  check_data(x, y);
  return lml_from_distances(pairwise_distances(x, x), y, hyper, jitter, &grad);
}

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& init,
               const GpFitConfig& config) {
  check_data(x, y);
  if (x.rows() < 2) throw PreconditionViolated("GP fitting needs at least two points");
  const Eigen::MatrixXd dist = pairwise_distances(x, x);

  const Eigen::Vector2d lower(std::log(config.lengthscale_lo), std::log(config.noise_lo));
  const Eigen::Vector2d upper(std::log(config.lengthscale_hi), std::log(config.noise_hi));
  Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const GpHyper h{std::exp(theta(0)), std::exp(theta(1))};
    Eigen::Vector2d g;
    try {
      const double v = lml_from_distances(dist, y, h, kGpJitter, &g);
      grad = g;
      return v;
    } catch (const CholeskyFailure&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo));
  };

  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  const std::size_t starts = std::max<std::size_t>(1, config.starts);
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd x0(2);
    if (s == 0) {
      x0 << std::log(init.lengthscale), std::log(std::max(init.noise_variance, config.noise_lo));
    } else {
      x0(0) = log_uniform(config.start_lengthscale_lo, config.start_lengthscale_hi);
      x0(1) = log_uniform(config.start_noise_lo, config.start_noise_hi);
    }
    const OptimResult r = maximize_lbfgs(objective, x0, lower, upper, config.optimizer);
    if (std::isfinite(r.value) && r.value > best_value) {
      best_value = r.value;
      best = r.x;
    }
  }
  if (best.size() == 0) throw NonFiniteLikelihood("no start produced a finite marginal likelihood");
  return GpModel::assemble(x, y, GpHyper{std::exp(best(0)), std::exp(best(1))});
}

InputScaler InputScaler::fit(const Eigen::MatrixXd& raw) {
  if (raw.rows() == 0) throw PreconditionViolated("cannot fit scaler on empty data");
  InputScaler s;
  s.mean = raw.colwise().mean();
  s.sd = ((raw.rowwise() - s.mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < s.sd.size(); ++j) {
    if (!(s.sd(j) > 0.0)) s.sd(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd InputScaler::transform(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != mean.size()) throw ShapeMismatch("input scaler dimension mismatch");
  return ((raw.rowwise() - mean).array().rowwise() / sd.array()).matrix();
}

TargetScaler TargetScaler::fit(const Eigen::VectorXd& raw) {
  if (raw.size() == 0) throw PreconditionViolated("cannot fit scaler on empty data");
  TargetScaler s;
  s.mean = raw.mean();
  s.sd = std::sqrt((raw.array() - s.mean).square().mean());
  if (!(s.sd > 0.0)) s.sd = 1.0;
  return s;
}

Eigen::VectorXd TargetScaler::transform(const Eigen::VectorXd& raw) const {
  return ((raw.array() - mean) / sd).matrix();
}

GpPrediction GpRegressor::predict(const Eigen::MatrixXd& raw_points) const {
  GpPrediction p = gp.predict(input.transform(raw_points));
  p.mean = (p.mean.array() * target.sd + target.mean).matrix();
  p.variance *= target.sd * target.sd;
  return p;
}

GpRegressor fit_gp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                             const GpFitConfig& config, const GpHyper& init) {
  check_data(raw_x, raw_y);
  GpRegressor r;
  r.input = InputScaler::fit(raw_x);
  r.target = TargetScaler::fit(raw_y);
  r.gp = gp_fit(r.input.transform(raw_x), r.target.transform(raw_y), init, config);
  return r;
}

GpRegressor assemble_gp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                  const InputScaler& input, const TargetScaler& target,
                                  const GpHyper& hyper) {
  check_data(raw_x, raw_y);
  GpRegressor r;
  r.input = input;
  r.target = target;
  r.gp = GpModel::assemble(input.transform(raw_x), target.transform(raw_y), hyper);
  return r;
}

}  // namespace wake
