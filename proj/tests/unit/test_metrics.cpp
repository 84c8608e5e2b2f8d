#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "wake/autoencoder.hpp"
#include "wake/errors.hpp"
#include "wake/metrics.hpp"
#include "wake/pipeline.hpp"

using namespace wake;

namespace {

struct TrainedAe {
  AeParams ae;
  Dataset test;
};

// Small autoencoder trained once and shared by the physical-error checks.
const TrainedAe& trained_ae() {
  static const TrainedAe t = [] {
    GeneratorConfig g;
    g.n = 440;
    g.seed = 71;
    const Dataset ds = generate_dataset(g);
    const std::vector<ScanGrid> train(ds.scans.begin(), ds.scans.begin() + 400);
    AeTrainConfig c;
    c.epochs = 30;
    c.seed = 3;
    TrainedAe out;
    out.ae = ae_train(train, c).params;
    out.test.params.assign(ds.params.begin() + 400, ds.params.end());
    out.test.scans.assign(ds.scans.begin() + 400, ds.scans.end());
    return out;
  }();
  return t;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("coefficient of determination") {
  Eigen::VectorXd a(4);
  a << 1.0, 2.0, 4.0, 7.0;
  CHECK(r_squared(a, a) == 1.0);
  CHECK(r_squared(a, Eigen::VectorXd::Constant(4, a.mean())) == doctest::Approx(0.0).scale(1.0));
  Eigen::VectorXd p(4);
  p << 1.5, 1.5, 5.0, 6.0;
  // mean 3.5; SS_tot = 6.25 + 2.25 + 0.25 + 12.25 = 21; SS_res = 0.25 + 0.25 + 1 + 1 = 2.5
  CHECK(std::abs(r_squared(a, p) - (1.0 - 2.5 / 21.0)) <= 1e-12);
  CHECK_THROWS_AS(r_squared(Eigen::VectorXd::Ones(3), a.head(3)), DegenerateVariance);
  CHECK(rmse(a, p) == doctest::Approx(std::sqrt(2.5 / 4.0)));
}

TEST_CASE("Silverman bandwidth") {
  Eigen::VectorXd s(5);
  s << 1, 2, 3, 4, 10;
  // sd = sqrt(50 / 4); quartiles 2 and 4 give IQR / 1.34 = 1.4925
  const double expect = 0.9 * std::min(std::sqrt(12.5), 2.0 / 1.34) * std::pow(5.0, -0.2);
  CHECK(silverman_bandwidth(s) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("KDE of identical errors peaks at the common value") {
  const double c = 0.37;
  const KdeCurve k = error_kde(Eigen::VectorXd::Constant(8, c));
  Eigen::Index peak;
  k.density.maxCoeff(&peak);
  CHECK(std::abs(k.x(peak) - c) <= (k.x(1) - k.x(0)));
  CHECK(k.x(0) == doctest::Approx(c - 3 * k.bandwidth));
  CHECK(k.x(255) == doctest::Approx(c + 3 * k.bandwidth));
  // Every kernel sits on the same point, so the grid holds exactly the
  // +-3h mass of one Gaussian.
  CHECK(std::abs(k.integral() - std::erf(3.0 / std::numbers::sqrt2)) <= 1e-3);
}

TEST_CASE("KDE of a symmetric sample is symmetric") {
  Eigen::VectorXd s(2);
  s << -1.0, 1.0;
  const KdeCurve k = error_kde(s);
  REQUIRE(k.x.size() == 256);
  for (Eigen::Index i = 0; i < 128; ++i) {
    CHECK(std::abs(k.x(i) + k.x(255 - i)) <= 1e-12);
    CHECK(std::abs(k.density(i) - k.density(255 - i)) <= 1e-10);
  }
  // Each kernel loses the tail beyond the grid: Phi(z) = (1 + erf(z / sqrt 2)) / 2.
  auto phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2)); };
  const double h = k.bandwidth;
  double mass = 0.0;
  for (double e : {-1.0, 1.0}) mass += 0.5 * (phi((k.x(255) - e) / h) - phi((k.x(0) - e) / h));
  CHECK(std::abs(k.integral() - mass) <= 1e-4);
}

TEST_CASE("KDE matches the double-loop definition") {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd e = oracle::uniform(rng, 10, 1, 0.0, 2.0);
  const KdeCurve k = error_kde(e);
  const double h = k.bandwidth;
  const double lo = e.minCoeff() - 3 * h, hi = e.maxCoeff() + 3 * h;
  for (Eigen::Index i = 0; i < 256; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / 255.0;
    double d = 0.0;
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double u = (x - e(j)) / h;
      d += std::exp(-0.5 * u * u) / (h * std::sqrt(2.0 * std::numbers::pi));
    }
    d /= 10.0;
    CHECK(std::abs(k.x(i) - x) <= 1e-12);
    CHECK(std::abs(k.density(i) - d) <= 1e-12);
  }
  CHECK(std::abs(error_kde(e, 0.2).bandwidth - 0.2) == 0.0);
}

TEST_CASE("normalized MSE by direct summation") {
  ScanGrid t = ScanGrid::with_shape(3, 4), e = ScanGrid::with_shape(3, 4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (double& v : t.values) v = u(rng);
  for (double& v : e.values) v = u(rng);
  double mean = 0.0;
  for (double v : t.values) mean += v;
  mean /= 12.0;
  double var = 0.0, mse = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    var += (t.values[i] - mean) * (t.values[i] - mean);
    mse += (t.values[i] - e.values[i]) * (t.values[i] - e.values[i]);
  }
  CHECK(std::abs(normalized_mse(t, e) - (mse / 12.0) / (var / 12.0)) <= 1e-12);
  ScanGrid flat = ScanGrid::with_shape(3, 4);
  std::fill(flat.values.begin(), flat.values.end(), 1.0);
  CHECK_THROWS_AS(normalized_mse(flat, e), DegenerateVariance);
  CHECK_THROWS_AS(normalized_mse(t, ScanGrid::with_shape(4, 3)), ShapeMismatch);
}

TEST_CASE("sorted errors and outliers") {
  const std::vector<double> e{0.4, 0.1, 0.3, 5.0, 0.2};
  const auto s = sorted_errors(e);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::is_permutation(s.begin(), s.end(), e.begin()));
  CHECK(outlier_fraction(e, 3.0) == doctest::Approx(0.2));  // median 0.3
  CHECK(outlier_fraction(e, 1.0) == doctest::Approx(0.4));
}

TEST_CASE("physical error of one scan") {
  const TrainedAe& t = trained_ae();
  const ScanGrid& truth = t.test.scans.front();
  Eigen::MatrixXd z(1, 4);
  z << 0.3, -0.2, 0.1, 0.5;
  const PhysicalError e = physical_reconstruction_error(z, t.ae, std::span(&truth, 1));
  const ScanGrid dec = ae_decode(t.ae, {{0.3, -0.2, 0.1, 0.5}});
  double mean = 0.0;
  for (double v : truth.values) mean += v;
  mean /= 2501.0;
  double var = 0.0, mse = 0.0;
  for (std::size_t i = 0; i < 2501; ++i) {
    var += (truth.values[i] - mean) * (truth.values[i] - mean);
    mse += (truth.values[i] - dec.values[i]) * (truth.values[i] - dec.values[i]);
  }
  CHECK(std::abs(e.predicted[0] - mse / var) <= 1e-12);
  CHECK_THROWS_AS(physical_reconstruction_error(Eigen::MatrixXd(2, 4), t.ae, std::span(&truth, 1)),
                  ShapeMismatch);
}

TEST_CASE("encoder outputs reproduce the decoded-exact floor") {
  const TrainedAe& t = trained_ae();
  const Eigen::MatrixXd z = encode_scans(t.ae, t.test.scans);
  const PhysicalError e = physical_reconstruction_error(z, t.ae, t.test.scans);
  CHECK(e.predicted == e.floor);
}

TEST_CASE("zero codes do no better than the floor") {
  const TrainedAe& t = trained_ae();
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.test.scans.size()), 4);
  const PhysicalError e = physical_reconstruction_error(z, t.ae, t.test.scans);
  std::size_t above = 0;
  for (std::size_t i = 0; i < e.predicted.size(); ++i) above += e.predicted[i] >= e.floor[i];
  CHECK(static_cast<double>(above) >= 0.95 * static_cast<double>(e.predicted.size()));
}

TEST_CASE("evaluation report") {
  const TrainedAe& t = trained_ae();
  const Eigen::MatrixXd actual = encode_scans(t.ae, t.test.scans);
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd pred = actual + 0.1 * oracle::uniform(rng, actual.rows(), 4, -1, 1);
  const EvalReport r = evaluate_predictions("m", "h", actual, pred, t.ae, t.test.scans);
  REQUIRE(r.dims.size() == 4);
  for (const auto& d : r.dims) CHECK(d.r2 <= 1.0);
  CHECK(std::is_sorted(r.sorted.begin(), r.sorted.end()));
  CHECK(std::is_permutation(r.sorted.begin(), r.sorted.end(), r.physical.predicted.begin()));
  for (double v : r.sorted) CHECK(v >= 0.0);
  CHECK(std::abs(r.kde.integral() - 1.0) <= 1e-3);
  const auto j = report_summary(r, {{"k", 1}});
  CHECK(j.at("format") == "wakereport1");
  CHECK(j.at("config").at("k") == 1);
  CHECK(j.at("physical").at("mean_normalized_mse").get<double>() == r.mean_physical);
}

}  // TEST_SUITE
