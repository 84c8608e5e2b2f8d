#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wake/errors.hpp"
#include "wake/scan_io.hpp"
#include "wake/wakegen.hpp"

using namespace wake;

namespace {

ParamVector weak_thrust() {
  ParamVector p;
  p.scada_ws = 15.0;
  p.met_ws_80m = 15.0;
  p.scada_power = 58.8;
  p.scada_ti = 0.1;
  return p;
}

}  // namespace

TEST_SUITE("wakegen") {

TEST_CASE("wake recovers far from the centerline") {
  CHECK(ground_truth_wake(ParamVector{}, 5.0, 1e3) == 1.0);
}

TEST_CASE("clamped thrust at the rotor matches the closed form") {
  const ParamVector p = weak_thrust();
  WakeModel m;
  REQUIRE(m.thrust_coefficient(p) == 0.05);
  // sigma(0) = 0.25, C = 1 - sqrt(1 - 0.05 / (8 * 0.0625)), u = 1 - C
  const double c = 1.0 - std::sqrt(1.0 - 0.05 / (8.0 * 0.25 * 0.25));
  CHECK(ground_truth_wake(p, 0.0, 0.0) == doctest::Approx(1.0 - c).epsilon(1e-14));
}

TEST_CASE("higher turbulence widens the wake") {
  ParamVector lo, hi;
  lo.scada_ti = 0.05;
  hi.scada_ti = 0.2;
  WakeModel m;
  for (double x : {0.5, 1.0, 3.0, 6.0}) CHECK(m.wake_width(hi, x) > m.wake_width(lo, x));
}

TEST_CASE("equivalent velocity") {
  CHECK(equivalent_velocity(5.0, {0.0, 0.0, 0.0}) == doctest::Approx(5.0));
  CHECK(equivalent_velocity(5.0, {60.0, 0.0, 0.0}) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(equivalent_velocity(5.0, {89.99, 0.0, 0.0}), GeometryDegenerate);

  for (double az : {-40.0, 0.0, 25.0, 70.0}) {
    for (double el : {0.0, 3.0, 10.0}) {
      const LidarGeometry g{az + 10.0, el, 10.0};
      const double u = 7.3;
      const double los = u * std::cos(az * M_PI / 180.0) * std::cos(el * M_PI / 180.0);
      CHECK(std::abs(equivalent_velocity(los, g) - u) <= 1e-12 * u);
    }
  }
}

TEST_CASE("uncorrupted scan equals the analytic wake") {
  const auto params = sample_params(3, 5);
  for (const auto& p : params) {
    const ScanGrid s = simulate_scan(p, 0.0, 0.0, 9);
    REQUIRE(s.invalid_count() == 0);
    bool exact = true;
    for (std::size_t i = 0; i < s.rows; ++i)
      for (std::size_t j = 0; j < s.cols; ++j)
        exact = exact && s.at(i, j) == ground_truth_wake(p, s.x_coords[i], s.r_coords[j]);
    CHECK(exact);
  }
}

TEST_CASE("scan grid shape and coordinates") {
  const ScanGrid s = analytic_scan(ParamVector{});
  CHECK(s.rows * s.cols == 2501);
  CHECK(s.x_coords.front() == 0.0);
  CHECK(s.x_coords.back() == doctest::Approx(6.0));
  CHECK(s.r_coords.front() == doctest::Approx(-2.0));
  CHECK(s.r_coords.back() == doctest::Approx(2.0));
  for (std::size_t i = 1; i < s.x_coords.size(); ++i) CHECK(s.x_coords[i] > s.x_coords[i - 1]);
  for (std::size_t j = 1; j < s.r_coords.size(); ++j) CHECK(s.r_coords[j] > s.r_coords[j - 1]);
  for (double v : s.values) {
    CHECK(v > 0.0);
    CHECK(v <= 2.0);
  }
}

TEST_CASE("dropout fraction includes the blackout arc") {
  const ScanGrid s = simulate_scan(ParamVector{}, 0.03, 0.1, 1234);
  const double frac = static_cast<double>(s.invalid_count()) / static_cast<double>(s.size());
  CHECK(frac >= 0.08);
  CHECK(frac <= 0.20);
}

TEST_CASE("simulation is deterministic") {
  const ParamVector p = sample_params(1, 77).front();
  CHECK(simulate_scan(p, 0.03, 0.1, 42) == simulate_scan(p, 0.03, 0.1, 42));
}

TEST_CASE("imputation of a constant neighbourhood") {
  ScanGrid s = ScanGrid::default_grid();
  for (double& v : s.values) v = 0.7;
  s.mask[10 * s.cols + 12] = 0;
  s.at(10, 12) = 123.0;
  const ScanGrid f = impute_missing(s);
  CHECK(f.at(10, 12) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("imputation reproduces a field linear in r") {
  ScanGrid s = ScanGrid::default_grid();
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = 0; j < s.cols; ++j) s.at(i, j) = 0.9 + 0.05 * s.r_coords[j];
  const std::size_t i = 30, j = 17;
  const double plane = 0.9 + 0.05 * s.r_coords[j];
  s.mask[i * s.cols + j] = 0;
  s.at(i, j) = 0.0;
  CHECK(std::abs(impute_missing(s).at(i, j) - plane) <= 1e-9);
}

TEST_CASE("imputation of an all-valid scan is the identity") {
  const ScanGrid s = simulate_scan(ParamVector{}, 0.03, 0.0, 3);
  REQUIRE(s.invalid_count() == 0);
  CHECK(impute_missing(s) == s);
}

TEST_CASE("a fully missing row is rejected") {
  ScanGrid s = ScanGrid::default_grid();
  for (std::size_t j = 0; j < s.cols; ++j) s.mask[5 * s.cols + j] = 0;
  CHECK_THROWS_AS(impute_missing(s), RowAllMissing);
}

TEST_CASE("sampled parameters stay inside the table bounds") {
  GeneratorConfig c;
  c.n = 10;
  c.seed = 17;
  const Dataset ds = generate_dataset(c);
  REQUIRE(ds.scans.size() == 10);
  REQUIRE(ds.params.size() == 10);
  const auto& lo = ParamVector::lower_bounds();
  const auto& hi = ParamVector::upper_bounds();
  CHECK(lo[0] == 2.92);
  CHECK(hi[4] == 2423.0);
  for (const auto& p : ds.params) {
    CHECK(p.in_bounds());
    const auto a = p.as_array();
    for (std::size_t d = 0; d < kParamDim; ++d) {
      CHECK(a[d] >= lo[d]);
      CHECK(a[d] <= hi[d]);
    }
  }
}

TEST_CASE("single noise-free scan equals the analytic wake") {
  GeneratorConfig c;
  c.n = 1;
  c.noise_sd = 0.0;
  c.dropout_rate = 0.0;
  c.seed = 8;
  const Dataset ds = generate_dataset(c);
  CHECK(ds.scans[0].values == analytic_scan(ds.params[0]).values);
}

TEST_CASE("centerline velocity recovers downstream") {
  GeneratorConfig c;
  c.n = 50;
  c.noise_sd = 0.0;
  c.dropout_rate = 0.0;
  c.seed = 21;
  const Dataset ds = generate_dataset(c);
  for (const auto& s : ds.scans) {
    const std::size_t mid = s.cols / 2;
    REQUIRE(s.r_coords[mid] == 0.0);
    for (std::size_t i = 1; i < s.rows; ++i) {
      if (s.x_coords[i - 1] < 1.0) continue;
      CHECK(s.at(i, mid) >= s.at(i - 1, mid));
    }
  }
}

TEST_CASE("dataset generation is reproducible") {
  GeneratorConfig c;
  c.n = 5;
  c.seed = 99;
  c.anomaly_rate = 0.5;
  const Dataset a = generate_dataset(c);
  const Dataset b = generate_dataset(c);
  CHECK(a.params == b.params);
  CHECK(a.scans == b.scans);
  c.seed = 100;
  CHECK_FALSE(generate_dataset(c).scans == a.scans);
}

TEST_CASE("default corpus round-trips through files") {
  GeneratorConfig c;
  c.seed = 2024;
  const Dataset ds = generate_dataset(c);
  REQUIRE(ds.scans.size() == 5000);
  const auto dir = std::filesystem::temp_directory_path() / "wake_test_corpus";
  std::filesystem::remove_all(dir);
  write_dataset(dir, ds);
  const Dataset back = read_dataset(dir);
  CHECK(back.params == ds.params);
  CHECK(back.scans == ds.scans);
  CHECK(back.seed == ds.seed);
  std::filesystem::remove_all(dir);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

}  // TEST_SUITE
