#pragma once

// Regression and reconstruction metrics shared by all latent regressors.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wake/autoencoder.hpp"
#include "wake/wakegen.hpp"

namespace wake {

/// Coefficient of determination 1 - SS_res / SS_tot. Throws
/// DegenerateVariance when `actual` is constant.
double r_squared(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Silverman's rule of thumb, 0.9 min(sd, IQR / 1.34) n^{-1/5}. Falls back
/// to a small positive width for degenerate samples.
double silverman_bandwidth(const Eigen::VectorXd& samples);

struct KdeCurve {
  Eigen::VectorXd x;
  Eigen::VectorXd density;
  double bandwidth = 0.0;

  /// Trapezoid-rule integral of the density.
  double integral() const;
};

/// Gaussian KDE sampled at `points` evenly spaced locations spanning
/// [min - 3h, max + 3h].
KdeCurve error_kde(const Eigen::VectorXd& errors, std::optional<double> bandwidth = std::nullopt,
                   std::size_t points = 256);

/// Mean squared difference divided by the variance of the true field.
/// Throws ShapeMismatch on differing grids, DegenerateVariance on a flat truth.
double normalized_mse(const ScanGrid& truth, const ScanGrid& estimate);

struct PhysicalError {
  std::vector<double> predicted;  // decoded predictions vs truth, per scan
  std::vector<double> floor;      // encode-then-decode of the truth, per scan
};

/// Decodes each row of `latents` (one row per scan) through the autoencoder
/// and compares it with the matching true scan.
PhysicalError physical_reconstruction_error(const Eigen::MatrixXd& latents, const AeParams& ae,
                                            std::span<const ScanGrid> truth);

std::vector<double> sorted_errors(std::span<const double> errors);

/// Fraction of errors above factor x median.
double outlier_fraction(std::span<const double> errors, double factor = 3.0);

struct DimensionMetrics {
  double r2 = 0.0;
  double rmse = 0.0;
  Eigen::VectorXd actual;
  Eigen::VectorXd predicted;
};

struct EvalReport {
  std::string model;
  std::string test_set_hash;
  std::vector<DimensionMetrics> dims;
  PhysicalError physical;
  std::vector<double> sorted;  // sorted physical errors
  KdeCurve kde;
  double outlier_factor = 3.0;
  double outlier_fraction = 0.0;
  double mean_physical = 0.0;
  double mean_floor = 0.0;
};

/// Builds a report from true and predicted latents (n x k) of the test set.
EvalReport evaluate_predictions(const std::string& model, const std::string& test_set_hash,
                                const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted,
                                const AeParams& ae, std::span<const ScanGrid> truth,
                                double outlier_factor = 3.0);

/// Summary JSON (per-dimension metrics, means, outlier rate, config echo).
nlohmann::json report_summary(const EvalReport& r, const nlohmann::json& config_echo);

/// Writes <dir>/report.json plus pairs_z<d>.csv, physical_errors.csv,
/// sorted_errors.csv and kde.csv.
void write_report(const std::filesystem::path& dir, const EvalReport& r,
                  const nlohmann::json& config_echo);

}  // namespace wake
