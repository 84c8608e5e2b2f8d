#pragma once

// Pool-based active learning for the exact GP. A candidate is scored by the
// drop in posterior variance averaged over a reference set R:
//
//   score(c) = mean_{t in R} cov_n(t, c)^2 / (var_n(c) + noise)
//
// Posterior variance does not depend on observed targets, so this is the
// exact expected reduction; no sampling over y is needed.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wake/gp.hpp"

namespace wake {

/// Log-RMSE returned when the mean squared error underflows (exact fit).
inline constexpr double kLogRmseFloor = -345.38776394910684;  // log(sqrt(1e-300))

struct LogRmse {
  double value = 0.0;
  bool exact_fit = false;
};

LogRmse log_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);

double expected_ivar_reduction(const GpModel& model, const Eigen::RowVectorXd& candidate,
                               const Eigen::MatrixXd& reference);

/// Mean posterior variance over the reference set.
double integrated_variance(const GpModel& model, const Eigen::MatrixXd& reference);

struct BatchSelection {
  std::vector<std::size_t> indices;  // rows of the pool, in pick order
  std::vector<double> scores;        // score of each pick when it was made
  double ivar_before = 0.0;
  double ivar_after = 0.0;           // at the model's hyperparameters
};

/// Greedy batch: pick the best candidate, condition on it (rank-1 update),
/// rescore, q times. Rows with `excluded[i] != 0` are never picked; ties go
/// to the lowest row. Throws PoolExhausted when fewer than q rows remain.
BatchSelection select_batch(const GpModel& model, const Eigen::MatrixXd& pool,
                            const std::vector<std::uint8_t>& excluded,
                            const Eigen::MatrixXd& reference, std::size_t q);

/// Latin hypercube sample of n points in the box [lo, hi].
Eigen::MatrixXd latin_hypercube(std::size_t n, const Eigen::RowVectorXd& lo,
                                const Eigen::RowVectorXd& hi, std::uint64_t seed);

struct AlConfig {
  std::size_t n0 = 50;
  std::size_t steps = 100;
  std::size_t q = 1;
  std::size_t repetitions = 20;
  std::size_t reference_size = 512;
  std::uint64_t seed = 0;
  bool refit = true;              // refit hyperparameters after every step
  std::size_t initial_starts = 8; // multi-starts of the first fit
  GpHyper init;

  void validate(std::size_t pool_size) const;
};

struct AlStep {
  std::size_t step = 0;             // 0 is the initial fit
  std::vector<std::size_t> selected;  // pool rows added at this step
  double ivar_before = 0.0;         // before selection
  double ivar_after_fixed = 0.0;    // after adding, same hyperparameters
  double ivar = 0.0;                // after adding and refitting
  double log_rmse = 0.0;
  bool exact_fit = false;
  GpHyper hyper;
};

struct AlTrace {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> initial;  // pool rows of the random start
  std::vector<AlStep> steps;
};

/// Runs config.repetitions independent AL loops for one output dimension.
/// Inputs are raw; they are standardized with statistics of the pool.
std::vector<AlTrace> al_run(const Eigen::MatrixXd& pool_x, const Eigen::VectorXd& pool_y,
                            const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y,
                            const AlConfig& config);

/// Log-RMSE of GPs fitted on `size` uniformly random pool rows, one per
/// repetition, with the same seeds as al_run.
std::vector<double> one_shot_log_rmse(const Eigen::MatrixXd& pool_x, const Eigen::VectorXd& pool_y,
                                      const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y,
                                      std::size_t size, const AlConfig& config);

}  // namespace wake
