#include "wake/kernel.hpp"

#include <cmath>

#include "wake/errors.hpp"

namespace wake {

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

double Matern32::from_distance(double r) const {
  const double t = kSqrt3 * r / lengthscale;
  return (1.0 + t) * std::exp(-t);
}

double Matern32::dlog_lengthscale(double r) const {
  const double t = kSqrt3 * r / lengthscale;
  return t * t * std::exp(-t);
}

double Matern32::gradient_factor(double r) const {
  const double a = kSqrt3 / lengthscale;
  return -a * a * std::exp(-a * r);
}

double Matern32::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                            const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  return from_distance((a - b).norm());
}

Eigen::MatrixXd Matern32::from_distances(const Eigen::MatrixXd& d) const {
  const double s = kSqrt3 / lengthscale;
  return d.unaryExpr([s](double r) {
    const double t = s * r;
    return (1.0 + t) * std::exp(-t);
  });
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("pairwise distances: dimension mismatch");
  // Row-major copies keep each point contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ra = a, rb = b;
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (ra.row(i) - rb.row(j)).norm();
  }
  return d;
}

Eigen::MatrixXd Matern32::cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
  if (a.cols() != b.cols()) throw ShapeMismatch("kernel: dimension mismatch");
  return from_distances(pairwise_distances(a, b));
}

double matern32(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b, double lengthscale) {
  if (!(lengthscale > 0.0)) throw PreconditionViolated("Matern lengthscale must be positive");
  return Matern32{lengthscale}(a, b);
}

}  // namespace wake
