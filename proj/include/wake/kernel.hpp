#pragma once

// Isotropic Matern covariance with smoothness 3/2:
//   k(r) = (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)

#include <Eigen/Dense>

namespace wake {

struct Matern32 {
  double lengthscale = 1.0;

  double from_distance(double r) const;
  /// dk/d(log l) at distance r.
  double dlog_lengthscale(double r) const;
  /// Factor g(r) with dk/dx = g(r) * (x - x') for the first argument.
  double gradient_factor(double r) const;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

  /// Elementwise covariance of a distance matrix.
  Eigen::MatrixXd from_distances(const Eigen::MatrixXd& d) const;

  /// Covariance between the rows of a and the rows of b.
  Eigen::MatrixXd cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd gram(const Eigen::MatrixXd& x) const { return cross(x, x); }
};

/// Pairwise Euclidean distances between rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Covariance of two points at lengthscale l; throws PreconditionViolated for l <= 0.
double matern32(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double lengthscale);

}  // namespace wake
