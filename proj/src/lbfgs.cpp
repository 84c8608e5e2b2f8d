#include "wake/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "wake/errors.hpp"

namespace wake {

OptimResult maximize_lbfgs(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw ShapeMismatch("optimizer bounds dimension mismatch");
  auto clip = [&](const Eigen::VectorXd& x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };

  OptimResult res;
  // Work on phi = -f so the textbook minimization recursion applies.
  auto phi = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.setZero(n);
    const double v = f(x, g);
    ++res.evaluations;
    g = -g;
    return std::isfinite(v) && g.allFinite() ? -v : std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd x = clip(x0);
  Eigen::VectorXd g(n);
  double value = phi(x, g);
  res.x = x;
  res.value = -value;
  if (!std::isfinite(value)) return res;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  for (; res.iterations < options.max_iterations; ++res.iterations) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0)) pg(i) = 0.0;
    }
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = pg;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      alpha[k] = rho * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      const double beta = rho * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd d = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg(i) == 0.0) d(i) = 0.0;
    }
    if (!(g.dot(d) < 0.0)) {
      d = -pg;
      s_hist.clear();
      y_hist.clear();
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;

    Eigen::VectorXd x_new, g_new(n);
    double value_new = value;
    bool accepted = false;
    for (std::size_t bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5) {
      x_new = clip(x + step * d);
      if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
      value_new = phi(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= value + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        // Retry once from steepest descent before giving up.
        s_hist.clear();
        y_hist.clear();
        continue;
      }
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (s_hist.size() > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    const double change = std::abs(value_new - value);
    x = x_new;
    g = g_new;
    value = value_new;
    if (change <= options.value_tolerance * std::max(1.0, std::abs(value))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.x = x;
  res.value = -value;
  return res;
}

}  // namespace wake
