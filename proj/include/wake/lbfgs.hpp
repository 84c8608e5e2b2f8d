#pragma once

#include <Eigen/Dense>
#include <functional>

namespace wake {

/// Objective returning f(x) and writing its gradient. A non-finite value
/// marks x as infeasible; the line search then backs off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  std::size_t max_iterations = 200;
  std::size_t history = 8;
  double gradient_tolerance = 1e-6;   // on the projected gradient, inf-norm
  double value_tolerance = 1e-10;     // relative change per iteration
  std::size_t max_backtracks = 40;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Box-constrained maximization by projected limited-memory BFGS with an
/// Armijo backtracking line search. x0 is clipped into the box first.
OptimResult maximize_lbfgs(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options = {});

}  // namespace wake
