#include "wake/wakegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "wake/errors.hpp"
#include "wake/parallel.hpp"

namespace wake {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Stream ids for derive_seed; scans use their record index.
constexpr std::uint64_t kParamStream = 0xA5A5'0000'0000'0001ULL;
constexpr std::uint64_t kScanStreamBase = 0x5CA1'0000'0000'0000ULL;

double lerp_unit(double lo, double hi, double u) { return lo + (hi - lo) * u; }

}  // namespace

std::array<double, kParamDim> ParamVector::as_array() const {
  return {scada_ws, met_ws_80m, scada_ti, met_bulk_richardson,
          scada_power, scada_rpm, scada_pitch};
}

ParamVector ParamVector::from_array(const std::array<double, kParamDim>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
}

const std::array<const char*, kParamDim>& ParamVector::names() {
  static const std::array<const char*, kParamDim> n = {
      "scada_ws", "met_ws_80m", "scada_ti", "met_bulk_richardson",
      "scada_power", "scada_rpm", "scada_pitch"};
  return n;
}

const std::array<double, kParamDim>& ParamVector::lower_bounds() {
  static const std::array<double, kParamDim> lo = {2.92, 3.9, 0.04, -0.01,
                                                   58.8, 7.07, -2.0};
  return lo;
}

const std::array<double, kParamDim>& ParamVector::upper_bounds() {
  static const std::array<double, kParamDim> hi = {15.22, 15.22, 0.36, 0.01,
                                                   2423.0, 16.95, 80.0};
  return hi;
}

bool ParamVector::in_bounds() const {
  const auto v = as_array();
  for (std::size_t i = 0; i < kParamDim; ++i) {
    if (!(v[i] >= lower_bounds()[i] && v[i] <= upper_bounds()[i])) return false;
  }
  return true;
}

std::size_t ScanGrid::invalid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 0));
}

ScanGrid ScanGrid::default_grid() {
  ScanGrid s;
  s.rows = kGridRows;
  s.cols = kGridCols;
  s.values.assign(kGridSize, 1.0);
  s.mask.assign(kGridSize, 1);
  s.x_coords.resize(kGridRows);
  s.r_coords.resize(kGridCols);
  // x/d in [0, 6], r/d in [-2, 2], spacing 0.1 d.
  for (std::size_t i = 0; i < kGridRows; ++i) s.x_coords[i] = 0.1 * static_cast<double>(i);
  for (std::size_t j = 0; j < kGridCols; ++j) {
    s.r_coords[j] = -2.0 + 0.1 * static_cast<double>(j);
  }
  return s;
}

ScanGrid ScanGrid::with_shape(std::size_t rows, std::size_t cols) {
  ScanGrid s;
  s.rows = rows;
  s.cols = cols;
  s.values.assign(rows * cols, 1.0);
  s.mask.assign(rows * cols, 1);
  s.x_coords.resize(rows);
  s.r_coords.resize(cols);
  std::iota(s.x_coords.begin(), s.x_coords.end(), 0.0);
  std::iota(s.r_coords.begin(), s.r_coords.end(), 0.0);
  return s;
}

double WakeModel::rotor_area() const {
  return 0.25 * std::numbers::pi * rotor_diameter * rotor_diameter;
}

double WakeModel::thrust_coefficient(const ParamVector& p) const {
  const double available =
      0.5 * rho_ref * rotor_area() * p.scada_ws * p.scada_ws * p.scada_ws * efficiency;
  const double ct = thrust_gain * (p.scada_power * 1e3) / available;
  return std::clamp(ct, ct_min, ct_max);
}

double WakeModel::expansion_rate(const ParamVector& p) const {
  return expansion_gain * p.scada_ti * (1.0 + stability_gain * p.met_bulk_richardson);
}

double WakeModel::wake_width(const ParamVector& p, double x) const {
  return expansion_rate(p) * x + initial_width;
}

double WakeModel::peak_deficit(const ParamVector& p, double x) const {
  const double sigma = wake_width(p, x);
  const double ct = thrust_coefficient(p);
  return 1.0 - std::sqrt(std::max(0.0, 1.0 - ct / (8.0 * sigma * sigma)));
}

double ground_truth_wake(const ParamVector& p, double x, double r,
                         const WakeModel& model) {
  const double sigma = model.wake_width(p, x);
  const double deficit = model.peak_deficit(p, x);
  const double u = 1.0 - deficit * std::exp(-r * r / (2.0 * sigma * sigma));
  return std::clamp(u, model.velocity_floor, model.velocity_ceiling);
}

double equivalent_velocity(double u_los, const LidarGeometry& g, double eps_geom) {
  const double projection =
      std::cos((g.azimuth_deg - g.wind_direction_deg) * kDegToRad) *
      std::cos(g.elevation_deg * kDegToRad);
  if (!(projection > eps_geom)) {
    throw GeometryDegenerate("beam nearly orthogonal to wind: cos(theta - theta_w) cos(beta) = " +
                             std::to_string(projection));
  }
  return u_los / projection;
}

ScanGrid analytic_scan(const ParamVector& p, const WakeModel& model) {
  ScanGrid s = ScanGrid::default_grid();
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) {
      s.at(i, j) = ground_truth_wake(p, s.x_coords[i], s.r_coords[j], model);
    }
  }
  return s;
}

ScanGrid simulate_scan(const ParamVector& p, double noise_sd, double dropout_rate,
                       std::uint64_t seed, const GeneratorConfig& config) {
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be non-negative");
  if (dropout_rate < 0.0 || dropout_rate > 0.3) {
    throw ConfigError("dropout_rate must lie in [0, 0.3]");
  }
  ScanGrid s = analytic_scan(p, config.wake);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  if (config.anomaly_rate > 0.0 && unif(rng) < config.anomaly_rate) {
    const double amplitude = lerp_unit(0.08, 0.2, unif(rng));
    const double center = lerp_unit(-1.6, -1.0, unif(rng));
    for (std::size_t i = 0; i < s.rows; ++i) {
      const double growth = s.x_coords[i] / s.x_coords.back();
      for (std::size_t j = 0; j < s.cols; ++j) {
        const double dr = (s.r_coords[j] - center) / 0.25;
        s.at(i, j) = std::min(config.wake.velocity_ceiling,
                              s.at(i, j) + amplitude * growth * std::exp(-0.5 * dr * dr));
      }
    }
  }

  if (noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (double& v : s.values) {
      v = std::clamp(v + noise(rng), config.wake.velocity_floor,
                     config.wake.velocity_ceiling);
    }
  }

  if (dropout_rate > 0.0) {
    for (auto& m : s.mask) m = unif(rng) < dropout_rate ? 0 : 1;

    const BlackoutModel& b = config.blackout;
    double az_lo = std::numeric_limits<double>::infinity();
    double az_hi = -az_lo;
    double range_lo = az_lo;
    double range_hi = -az_lo;
    for (double x : s.x_coords) {
      for (double r : s.r_coords) {
        const double az = std::atan2(r - b.lidar_r, x - b.lidar_x) / kDegToRad;
        const double range = std::hypot(x - b.lidar_x, r - b.lidar_r);
        az_lo = std::min(az_lo, az);
        az_hi = std::max(az_hi, az);
        range_lo = std::min(range_lo, range);
        range_hi = std::max(range_hi, range);
      }
    }
    const double width = lerp_unit(b.min_width_deg, b.max_width_deg, unif(rng));
    const double depth = lerp_unit(b.min_range_depth, b.max_range_depth, unif(rng));
    const double az0 = lerp_unit(az_lo, az_hi - width, unif(rng));
    const double range0 = lerp_unit(range_lo, range_hi - depth, unif(rng));
    for (std::size_t i = 0; i < s.rows; ++i) {
      for (std::size_t j = 0; j < s.cols; ++j) {
        const double dx = s.x_coords[i] - b.lidar_x;
        const double dr = s.r_coords[j] - b.lidar_r;
        const double az = std::atan2(dr, dx) / kDegToRad;
        const double range = std::hypot(dx, dr);
        if (az >= az0 && az <= az0 + width && range >= range0 && range <= range0 + depth) {
          s.mask[i * s.cols + j] = 0;
        }
      }
    }
  }
  return s;
}

ScanGrid impute_missing(const ScanGrid& s) {
  for (std::size_t i = 0; i < s.rows; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < s.cols && !any; ++j) any = s.valid(i, j);
    if (!any) throw RowAllMissing("grid row " + std::to_string(i) + " has no valid cell");
  }
  ScanGrid out = s;
  const auto rows = static_cast<std::ptrdiff_t>(s.rows);
  const auto cols = static_cast<std::ptrdiff_t>(s.cols);
  const std::ptrdiff_t max_radius = std::max(rows, cols);
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      if (s.valid(i, j)) continue;
      for (std::ptrdiff_t radius = 1; radius <= max_radius; ++radius) {
        double weight_sum = 0.0;
        double value_sum = 0.0;
        int found = 0;
        for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - radius);
             a <= std::min(rows - 1, i + radius); ++a) {
          for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, j - radius);
               c <= std::min(cols - 1, j + radius); ++c) {
            if (!s.valid(a, c)) continue;
            const double d2 = static_cast<double>((a - i) * (a - i) + (c - j) * (c - j));
            const double w = 1.0 / d2;
            weight_sum += w;
            value_sum += w * s.at(a, c);
            ++found;
          }
        }
        if (found >= 3) {
          out.at(i, j) = value_sum / weight_sum;
          break;
        }
      }
    }
  }
  std::fill(out.mask.begin(), out.mask.end(), 1);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<ParamVector> sample_params(std::size_t n, std::uint64_t seed,
                                       const ScadaCoupling& scada) {
  std::mt19937_64 rng(derive_seed(seed, kParamStream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Latin hypercube in the unit cube, one column per channel.
  std::vector<std::array<double, kParamDim>> u(n);
  std::vector<std::size_t> perm(n);
  for (std::size_t d = 0; d < kParamDim; ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      u[i][d] = (static_cast<double>(perm[i]) + unif(rng)) / static_cast<double>(n);
    }
  }

  const auto& lo = ParamVector::lower_bounds();
  const auto& hi = ParamVector::upper_bounds();
  std::vector<ParamVector> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = u[i];
    ParamVector p;
    p.scada_ws = lerp_unit(lo[0], hi[0], c[0]);
    const double ws = p.scada_ws;
    p.met_ws_80m = std::clamp(ws * (1.0 + scada.met_jitter * (c[1] - 0.5)), lo[1], hi[1]);
    p.scada_ti = lerp_unit(lo[2], hi[2], c[2]);
    p.met_bulk_richardson = lerp_unit(lo[3], hi[3], c[3]);

    const double cube = [&] {
      const double in3 = std::pow(scada.cut_in_speed, 3);
      const double rated3 = std::pow(scada.rated_speed, 3);
      return std::clamp((ws * ws * ws - in3) / (rated3 - in3), 0.0, 1.0);
    }();
    p.scada_power = std::clamp(
        scada.rated_power * cube * (1.0 + scada.power_jitter * (c[4] - 0.5)), lo[4], hi[4]);
    const double rpm_ramp =
        std::clamp((ws - scada.cut_in_speed) / (scada.rpm_ramp_end - scada.cut_in_speed), 0.0, 1.0);
    p.scada_rpm = std::clamp(lerp_unit(lo[5], hi[5], rpm_ramp) + scada.rpm_jitter * (c[5] - 0.5),
                             lo[5], hi[5]);
    p.scada_pitch = std::clamp(
        scada.pitch_slope * std::max(0.0, ws - scada.rated_speed) + scada.pitch_jitter * (c[6] - 0.5),
        lo[6], hi[6]);
    out[i] = p;
  }
  return out;
}

Dataset generate_dataset(const GeneratorConfig& config) {
  if (config.n < 1) throw ConfigError("dataset size must be at least 1");
  Dataset ds;
  ds.seed = config.seed;
  ds.config = config;
  ds.params = sample_params(config.n, config.seed, config.scada);
  ds.scans.resize(config.n);
  parallel_for(config.n, [&](std::size_t i) {
    const auto scan_seed = derive_seed(config.seed, kScanStreamBase + i);
    ds.scans[i] = impute_missing(
        simulate_scan(ds.params[i], config.noise_sd, config.dropout_rate, scan_seed, config));
  });
  return ds;
}

}  // namespace wake
