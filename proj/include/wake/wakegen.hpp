#pragma once

// Synthetic wake fields and a virtual LiDAR post-processing chain.
//
// A Gaussian-deficit engineering wake model stands in for the measured
// flow. Scans are sampled on a fixed 61 x 41 grid (x/d in [0, 6],
// r/d in [-2, 2]), corrupted with measurement noise and quality-control
// dropout, then gap-filled by local inverse-distance interpolation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace wake {

inline constexpr std::size_t kGridRows = 61;  // streamwise stations
inline constexpr std::size_t kGridCols = 41;  // spanwise stations
inline constexpr std::size_t kGridSize = kGridRows * kGridCols;  // 2501
inline constexpr std::size_t kParamDim = 7;

/// Operating conditions of one 10-minute record.
struct ParamVector {
  double scada_ws = 8.0;              // m/s
  double met_ws_80m = 8.0;            // m/s
  double scada_ti = 0.1;              // -
  double met_bulk_richardson = 0.0;   // -
  double scada_power = 1000.0;        // kW
  double scada_rpm = 12.0;            // rpm
  double scada_pitch = 0.0;           // deg

  std::array<double, kParamDim> as_array() const;
  static ParamVector from_array(const std::array<double, kParamDim>& a);

  static const std::array<const char*, kParamDim>& names();
  static const std::array<double, kParamDim>& lower_bounds();
  static const std::array<double, kParamDim>& upper_bounds();

  bool in_bounds() const;
  bool operator==(const ParamVector&) const = default;
};

/// One normalized wake scan. Row index runs downstream (x), column index
/// runs spanwise (r). `mask[i] == 1` marks a valid sample.
struct ScanGrid {
  std::size_t rows = kGridRows;
  std::size_t cols = kGridCols;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::vector<double> x_coords;
  std::vector<double> r_coords;

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  bool valid(std::size_t i, std::size_t j) const { return mask[i * cols + j] != 0; }
  std::size_t size() const { return rows * cols; }
  std::size_t invalid_count() const;

  /// Empty scan on the default grid, all values 1, mask all-true.
  static ScanGrid default_grid();
  /// Empty scan of arbitrary shape with unit-spaced coordinates.
  static ScanGrid with_shape(std::size_t rows, std::size_t cols);

  bool operator==(const ScanGrid&) const = default;
};

struct LidarGeometry {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double wind_direction_deg = 0.0;
};

/// Fixed coefficients of the stand-in wake physics and the SCADA coupling.
struct WakeModel {
  double rho_ref = 1.225;           // kg/m^3
  double rotor_diameter = 127.0;    // m
  double efficiency = 0.4;          // power coefficient normalization
  double thrust_gain = 0.8;
  double ct_min = 0.05;
  double ct_max = 0.95;
  double expansion_gain = 0.35;     // k* = gain * TI * (1 + stability_gain * Ri)
  double stability_gain = 5.0;
  double initial_width = 0.25;      // sigma(0)/d
  double velocity_floor = 1e-3;     // lower clamp of u/u_inf
  double velocity_ceiling = 2.0;

  double rotor_area() const;
  /// Thrust proxy Ct, clamped to [ct_min, ct_max].
  double thrust_coefficient(const ParamVector& p) const;
  double expansion_rate(const ParamVector& p) const;
  /// sigma(x)/d
  double wake_width(const ParamVector& p, double x) const;
  double peak_deficit(const ParamVector& p, double x) const;
};

/// Power-curve proxy tying SCADA channels to hub-height wind speed.
struct ScadaCoupling {
  double rated_power = 2300.0;      // kW
  double cut_in_speed = 3.0;        // m/s
  double rated_speed = 9.5;         // m/s
  double power_jitter = 0.10;       // relative, full width
  double met_jitter = 0.15;         // relative, full width
  double rpm_ramp_end = 8.5;        // m/s at which rpm saturates
  double rpm_jitter = 0.6;          // rpm, full width
  double pitch_slope = 3.5;         // deg per m/s above rated
  double pitch_jitter = 3.0;        // deg, full width
};

/// Arc-shaped ray blackout emulating carrier-to-noise rejection, seen
/// from a virtual LiDAR sitting upstream of the grid.
struct BlackoutModel {
  double lidar_x = -3.0;            // d
  double lidar_r = 0.0;             // d
  double min_width_deg = 6.0;
  double max_width_deg = 10.0;
  double min_range_depth = 1.0;     // d
  double max_range_depth = 2.0;     // d
};

struct GeneratorConfig {
  std::size_t n = 5000;
  double noise_sd = 0.03;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;
  /// Probability that a scan carries a lateral speed-up feature on the
  /// negative-r side (not explained by the parameters). Default off.
  double anomaly_rate = 0.0;
  WakeModel wake;
  ScadaCoupling scada;
  BlackoutModel blackout;
};

struct Dataset {
  std::vector<ParamVector> params;
  std::vector<ScanGrid> scans;
  std::uint64_t seed = 0;
  GeneratorConfig config;
};

/// u/u_inf of the analytic wake at downstream distance x and spanwise
/// offset r (both in rotor diameters).
double ground_truth_wake(const ParamVector& p, double x, double r,
                         const WakeModel& model = {});

/// Horizontal equivalent velocity from a line-of-sight measurement.
/// Throws GeometryDegenerate when cos(theta - theta_w) * cos(beta) <= eps.
double equivalent_velocity(double u_los, const LidarGeometry& g,
                           double eps_geom = 1e-3);

/// Noise-free analytic scan on the default grid.
ScanGrid analytic_scan(const ParamVector& p, const WakeModel& model = {});

ScanGrid simulate_scan(const ParamVector& p, double noise_sd,
                       double dropout_rate, std::uint64_t seed,
                       const GeneratorConfig& config = {});

/// Fills invalid cells by inverse-distance weighting over the nearest valid
/// cells. The search window grows until it holds at least three of them.
ScanGrid impute_missing(const ScanGrid& s);

/// Samples operating conditions by Latin hypercube with SCADA coupling.
std::vector<ParamVector> sample_params(std::size_t n, std::uint64_t seed,
                                       const ScadaCoupling& scada = {});

Dataset generate_dataset(const GeneratorConfig& config);

/// Deterministic 64-bit stream seed derived from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace wake
