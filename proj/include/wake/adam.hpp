#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wake {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation for minimization.
class Adam {
 public:
  Adam(std::size_t n, AdamConfig config = {});

  /// params -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(std::span<double> params, std::span<const double> grad);

  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace wake
