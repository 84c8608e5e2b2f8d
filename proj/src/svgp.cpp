#include "wake/svgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "wake/errors.hpp"
#include "wake/wakegen.hpp"

namespace wake {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_shapes(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw ShapeMismatch("SVGP inputs and targets differ in length");
  if (z.cols() != x.cols()) throw ShapeMismatch("inducing inputs and data differ in dimension");
  if (z.rows() < 1 || x.rows() < 1) throw PreconditionViolated("SVGP needs data and inducing inputs");
}

double elbo_impl(const Matern32& k, double s, const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                 const Eigen::VectorXd& y, double jitter, ElboGradient* grad) {
  check_shapes(z, x, y);
  if (!(s > 0.0)) throw PreconditionViolated("SVGP noise variance must be positive");
  const Eigen::Index m = z.rows();
  const auto n = static_cast<double>(x.rows());

  const Eigen::MatrixXd dmm = pairwise_distances(z, z);
  const Eigen::MatrixXd dmn = pairwise_distances(z, x);
  Eigen::MatrixXd kmm = k.from_distances(dmm);
  kmm.diagonal().array() += jitter;
  const Eigen::MatrixXd u = k.from_distances(dmn);

  Eigen::LLT<Eigen::MatrixXd> llt_m(kmm);
  if (llt_m.info() != Eigen::Success) throw CholeskyFailure("K_mm is not positive definite");
  const auto lm = llt_m.matrixL();
  const double sqrt_s = std::sqrt(s);
  const Eigen::MatrixXd a = lm.solve(u) / sqrt_s;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(a);
  b = b.selfadjointView<Eigen::Lower>();
  Eigen::LLT<Eigen::MatrixXd> llt_b(b);
  if (llt_b.info() != Eigen::Success) throw CholeskyFailure("I + A A^T is not positive definite");
  const Eigen::VectorXd ay = a * y;
  const Eigen::VectorXd c = llt_b.matrixL().solve(ay) / sqrt_s;

  const double yy = y.squaredNorm();
  const double trace_q = s * a.squaredNorm();
  const double value = -0.5 * n * kLog2Pi - llt_b.matrixLLT().diagonal().array().log().sum() -
                       0.5 * n * std::log(s) - 0.5 * (yy / s - c.squaredNorm()) -
                       (n - trace_q) / (2.0 * s);
  if (!grad) return value;

  // Gradients through M = K_mm + jitter I, U = K_mn and s.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd lm_inv = lm.solve(identity);
  const Eigen::MatrixXd b_inv = llt_b.solve(identity);
  const Eigen::MatrixXd mi = lm_inv.transpose() * lm_inv;
  const Eigen::MatrixXd si = lm_inv.transpose() * b_inv * lm_inv;
  const Eigen::MatrixXd p = u * u.transpose();
  const Eigen::VectorXd bvec = u * y;
  const Eigen::VectorXd beta = si * bvec;

  const Eigen::MatrixXd g_sigma = -0.5 * si - (0.5 / (s * s)) * beta * beta.transpose();
  const Eigen::MatrixXd mpm = mi * p * mi;
  const Eigen::MatrixXd g_m = g_sigma + 0.5 * mi - (0.5 / s) * mpm;
  const Eigen::MatrixXd g_u =
      (2.0 / s) * g_sigma * u + (1.0 / (s * s)) * beta * y.transpose() + (1.0 / s) * mi * u;

  const double tr_si_p = si.cwiseProduct(p).sum();
  const double tr_mi_p = mi.cwiseProduct(p).sum();
  const double dfds = 0.5 * tr_si_p / (s * s) - n / (2.0 * s) + 0.5 * yy / (s * s) -
                      bvec.dot(beta) / (s * s * s) + 0.5 * beta.dot(p * beta) / (s * s * s * s) +
                      (n - tr_mi_p) / (2.0 * s * s);
  grad->dlog_noise = s * dfds;

  const auto dlog = [&k](double r) { return k.dlog_lengthscale(r); };
  grad->dlog_lengthscale =
      g_m.cwiseProduct(dmm.unaryExpr(dlog)).sum() + g_u.cwiseProduct(dmn.unaryExpr(dlog)).sum();

  const auto gfac = [&k](double r) { return k.gradient_factor(r); };
  const Eigen::MatrixXd gu = g_u.cwiseProduct(dmn.unaryExpr(gfac));
  const Eigen::MatrixXd gm = (g_m + g_m.transpose()).cwiseProduct(dmm.unaryExpr(gfac));
  grad->dinducing = gu.rowwise().sum().asDiagonal() * z - gu * x +
                    gm.rowwise().sum().asDiagonal() * z - gm * z;
  return value;
}

// Escalating jitter; returns the bound and writes the jitter used.
double elbo_escalating(const Matern32& k, double s, const Eigen::MatrixXd& z,
                       const Eigen::MatrixXd& x, const Eigen::VectorXd& y, ElboGradient* grad,
                       double* used = nullptr) {
  for (double j = kSvgpJitter; j <= kGpMaxJitter * (1.0 + 1e-9); j *= 100.0) {
    try {
      const double v = elbo_impl(k, s, z, x, y, j, grad);
      if (!std::isfinite(v)) continue;
      if (used) *used = j;
      return v;
    } catch (const CholeskyFailure&) {
    }
  }
  throw CholeskyFailure("K_mm factorization failed after jitter escalation");
}

Eigen::MatrixXd random_subset(const Eigen::MatrixXd& x, std::size_t m, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), x.cols());
  for (std::size_t i = 0; i < m; ++i) z.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return z;
}

}  // namespace

double svgp_elbo(const Matern32& kernel, double noise_variance, const Eigen::MatrixXd& inducing,
                 const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double jitter) {
  return elbo_impl(kernel, noise_variance, inducing, x, y, jitter, nullptr);
}

double svgp_elbo_grad(const Matern32& kernel, double noise_variance,
                      const Eigen::MatrixXd& inducing, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& y, double jitter, ElboGradient& grad) {
  return elbo_impl(kernel, noise_variance, inducing, x, y, jitter, &grad);
}

SvgpModel SvgpModel::assemble(Eigen::MatrixXd inducing, Eigen::MatrixXd inputs,
                              Eigen::VectorXd targets, const GpHyper& hyper) {
  check_shapes(inducing, inputs, targets);
  if (!(hyper.lengthscale > 0.0) || !(hyper.noise_variance > 0.0))
    throw PreconditionViolated("SVGP hyperparameters out of range");
  SvgpModel mdl;
  mdl.hyper_ = hyper;
  const Matern32 k = mdl.kernel();
  mdl.elbo_ = elbo_escalating(k, hyper.noise_variance, inducing, inputs, targets, nullptr,
                              &mdl.jitter_);

  const Eigen::Index m = inducing.rows();
  Eigen::MatrixXd kmm = k.gram(inducing);
  kmm.diagonal().array() += mdl.jitter_;
  mdl.chol_m_ = kmm.llt().matrixL();
  const double sqrt_s = std::sqrt(hyper.noise_variance);
  const Eigen::MatrixXd a =
      mdl.chol_m_.triangularView<Eigen::Lower>().solve(k.cross(inducing, inputs)) / sqrt_s;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m) + a * a.transpose();
  mdl.chol_b_ = b.llt().matrixL();
  const auto lb = mdl.chol_b_.triangularView<Eigen::Lower>();
  const Eigen::VectorXd c = lb.solve(a * targets) / sqrt_s;
  mdl.weights_ = mdl.chol_b_.transpose().triangularView<Eigen::Upper>().solve(c);

  mdl.inducing_ = std::move(inducing);
  mdl.inputs_ = std::move(inputs);
  mdl.targets_ = std::move(targets);
  return mdl;
}

GpPrediction SvgpModel::predict(const Eigen::MatrixXd& points) const {
  const Eigen::MatrixXd w =
      chol_m_.triangularView<Eigen::Lower>().solve(kernel().cross(inducing_, points));
  const Eigen::MatrixXd v = chol_b_.triangularView<Eigen::Lower>().solve(w);
  GpPrediction out;
  out.mean = w.transpose() * weights_;
  out.variance = (1.0 - w.colwise().squaredNorm().array() + v.colwise().squaredNorm().array())
                     .max(0.0)
                     .matrix()
                     .transpose();
  return out;
}

SvgpModel svgp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& init,
                   const SvgpFitConfig& config, const Eigen::MatrixXd& initial_inducing) {
  const auto m = initial_inducing.rows() > 0 ? static_cast<std::size_t>(initial_inducing.rows())
                                             : config.inducing;
  if (m < 1 || m > static_cast<std::size_t>(x.rows()))
    throw PreconditionViolated("inducing count must lie in [1, n]");
  if (x.rows() != y.size()) throw ShapeMismatch("SVGP inputs and targets differ in length");
  const Eigen::Index d = x.cols();
  const auto zsize = static_cast<Eigen::Index>(m) * d;

  const Eigen::RowVectorXd box_lo = x.colwise().minCoeff();
  const Eigen::RowVectorXd box_hi = x.colwise().maxCoeff();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo));
  };

  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  const std::size_t starts = std::max<std::size_t>(1, config.starts);
  for (std::size_t st = 0; st < starts; ++st) {
    const bool keep = initial_inducing.rows() > 0 && (st == 0 || !config.optimize_inducing);
    Eigen::MatrixXd z0 = keep
                             ? initial_inducing
                             : random_subset(x, m, derive_seed(config.seed, st));
    Eigen::VectorXd theta(2 + zsize);
    if (st == 0) {
      theta(0) = std::log(init.lengthscale);
      theta(1) = std::log(std::max(init.noise_variance, config.noise_lo));
    } else {
      theta(0) = log_uniform(config.start_lengthscale_lo, config.start_lengthscale_hi);
      theta(1) = log_uniform(config.start_noise_lo, config.start_noise_hi);
    }
    theta.tail(zsize) = Eigen::Map<const Eigen::VectorXd>(z0.data(), zsize);

    Eigen::VectorXd lower(2 + zsize), upper(2 + zsize);
    lower(0) = std::log(config.lengthscale_lo);
    upper(0) = std::log(config.lengthscale_hi);
    lower(1) = std::log(config.noise_lo);
    upper(1) = std::log(config.noise_hi);
    if (config.optimize_inducing) {
      Eigen::MatrixXd lo = box_lo.replicate(static_cast<Eigen::Index>(m), 1);
      Eigen::MatrixXd hi = box_hi.replicate(static_cast<Eigen::Index>(m), 1);
      lower.tail(zsize) = Eigen::Map<const Eigen::VectorXd>(lo.data(), zsize);
      upper.tail(zsize) = Eigen::Map<const Eigen::VectorXd>(hi.data(), zsize);
    } else {
      lower.tail(zsize) = theta.tail(zsize);
      upper.tail(zsize) = theta.tail(zsize);
    }

    Objective objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
      const Eigen::MatrixXd z = Eigen::Map<const Eigen::MatrixXd>(t.data() + 2,
                                                                  static_cast<Eigen::Index>(m), d);
      ElboGradient eg;
      try {
        const double v = elbo_escalating(Matern32{std::exp(t(0))}, std::exp(t(1)), z, x, y, &eg);
        g.resize(t.size());
        g(0) = eg.dlog_lengthscale;
        g(1) = eg.dlog_noise;
        g.tail(zsize) = Eigen::Map<const Eigen::VectorXd>(eg.dinducing.data(), zsize);
        if (!config.optimize_inducing) g.tail(zsize).setZero();
        return v;
      } catch (const CholeskyFailure&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    const OptimResult r = maximize_lbfgs(objective, theta, lower, upper, config.optimizer);
    if (std::isfinite(r.value) && r.value > best_value) {
      best_value = r.value;
      best = r.x;
    }
  }
  if (best.size() == 0) throw NonFiniteLikelihood("no start produced a finite bound");
  Eigen::MatrixXd z =
      Eigen::Map<const Eigen::MatrixXd>(best.data() + 2, static_cast<Eigen::Index>(m), d);
  return SvgpModel::assemble(std::move(z), x, y, GpHyper{std::exp(best(0)), std::exp(best(1))});
}

GpPrediction SvgpRegressor::predict(const Eigen::MatrixXd& raw_points) const {
  GpPrediction p = gp.predict(input.transform(raw_points));
  p.mean = (p.mean.array() * target.sd + target.mean).matrix();
  p.variance *= target.sd * target.sd;
  return p;
}

SvgpRegressor fit_svgp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                 const SvgpFitConfig& config, const GpHyper& init) {
  SvgpRegressor r;
  r.input = InputScaler::fit(raw_x);
  r.target = TargetScaler::fit(raw_y);
  r.gp = svgp_fit(r.input.transform(raw_x), r.target.transform(raw_y), init, config);
  return r;
}

SvgpRegressor assemble_svgp_regressor(const Eigen::MatrixXd& raw_x, const Eigen::VectorXd& raw_y,
                                      const InputScaler& input, const TargetScaler& target,
                                      const GpHyper& hyper, const Eigen::MatrixXd& inducing) {
  SvgpRegressor r;
  r.input = input;
  r.target = target;
  r.gp = SvgpModel::assemble(inducing, input.transform(raw_x), target.transform(raw_y), hyper);
  return r;
}

}  // namespace wake
