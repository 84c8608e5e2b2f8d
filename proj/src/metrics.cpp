#include "wake/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "wake/csv.hpp"
#include "wake/errors.hpp"
#include "wake/parallel.hpp"

namespace wake {

double r_squared(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
  if (actual.size() != predicted.size()) throw ShapeMismatch("R^2: length mismatch");
  if (actual.size() < 2) throw PreconditionViolated("R^2 needs at least two samples");
  const double ss_tot = (actual.array() - actual.mean()).square().sum();
  if (!(ss_tot > 0.0)) throw DegenerateVariance("R^2 undefined for constant actual values");
  return 1.0 - (actual - predicted).squaredNorm() / ss_tot;
}

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
  if (actual.size() != predicted.size()) throw ShapeMismatch("RMSE: length mismatch");
  if (actual.size() == 0) throw PreconditionViolated("RMSE of an empty sample");
  return std::sqrt((actual - predicted).squaredNorm() / static_cast<double>(actual.size()));
}

double silverman_bandwidth(const Eigen::VectorXd& samples) {
  const auto n = static_cast<double>(samples.size());
  const double sd = std::sqrt((samples.array() - samples.mean()).square().sum() / std::max(1.0, n - 1.0));
  std::vector<double> v(samples.data(), samples.data() + samples.size());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(std::abs(samples.mean()) * 1e-3, 1e-12);
  return 0.9 * spread * std::pow(n, -0.2);
}

double KdeCurve::integral() const {
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (density(i) + density(i - 1)) * (x(i) - x(i - 1));
  return s;
}

KdeCurve error_kde(const Eigen::VectorXd& errors, std::optional<double> bandwidth,
                   std::size_t points) {
  if (errors.size() < 2) throw PreconditionViolated("KDE needs at least two samples");
  if (points < 2) throw PreconditionViolated("KDE needs at least two evaluation points");
  KdeCurve c;
  c.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(errors);
  if (!(c.bandwidth > 0.0)) throw PreconditionViolated("KDE bandwidth must be positive");
  const double h = c.bandwidth;
  c.x = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(points), errors.minCoeff() - 3.0 * h,
                                   errors.maxCoeff() + 3.0 * h);
  const double norm = 1.0 / (static_cast<double>(errors.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  c.density.resize(c.x.size());
  for (Eigen::Index i = 0; i < c.x.size(); ++i) {
    c.density(i) = norm * ((errors.array() - c.x(i)) / h).square().unaryExpr([](double t) {
      return std::exp(-0.5 * t);
    }).sum();
  }
  return c;
}

double normalized_mse(const ScanGrid& truth, const ScanGrid& estimate) {
  if (truth.rows != estimate.rows || truth.cols != estimate.cols ||
      truth.values.size() != estimate.values.size())
    throw ShapeMismatch("scan shapes differ");
  const Eigen::Map<const Eigen::VectorXd> t(truth.values.data(),
                                            static_cast<Eigen::Index>(truth.values.size()));
  const Eigen::Map<const Eigen::VectorXd> e(estimate.values.data(),
                                            static_cast<Eigen::Index>(estimate.values.size()));
  const double var = (t.array() - t.mean()).square().mean();
  if (!(var > 0.0)) throw DegenerateVariance("true scan has zero variance");
  return (t - e).squaredNorm() / static_cast<double>(t.size()) / var;
}

PhysicalError physical_reconstruction_error(const Eigen::MatrixXd& latents, const AeParams& ae,
                                            std::span<const ScanGrid> truth) {
  if (static_cast<std::size_t>(latents.rows()) != truth.size())
    throw ShapeMismatch("one latent row per scan required");
  if (static_cast<std::size_t>(latents.cols()) != ae.arch.latent_dim)
    throw ShapeMismatch("latent width does not match the autoencoder");
  PhysicalError out;
  out.predicted.resize(truth.size());
  out.floor.resize(truth.size());
  parallel_for(truth.size(), [&](std::size_t i) {
    const Eigen::RowVectorXd row = latents.row(static_cast<Eigen::Index>(i));
    const LatentCode z{std::vector<double>(row.data(), row.data() + row.size())};
    out.predicted[i] = normalized_mse(truth[i], ae_decode(ae, z));
    out.floor[i] = normalized_mse(truth[i], ae_forward(ae, truth[i]).reconstruction);
  });
  return out;
}

std::vector<double> sorted_errors(std::span<const double> errors) {
  std::vector<double> v(errors.begin(), errors.end());
  std::sort(v.begin(), v.end());
  return v;
}

double outlier_fraction(std::span<const double> errors, double factor) {
  if (errors.empty()) return 0.0;
  const std::vector<double> v = sorted_errors(errors);
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  const auto above = std::count_if(v.begin(), v.end(), [&](double e) { return e > factor * median; });
  return static_cast<double>(above) / static_cast<double>(n);
}

EvalReport evaluate_predictions(const std::string& model, const std::string& test_set_hash,
                                const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted,
                                const AeParams& ae, std::span<const ScanGrid> truth,
                                double outlier_factor) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw ShapeMismatch("actual and predicted latents differ in shape");
  EvalReport r;
  r.model = model;
  r.test_set_hash = test_set_hash;
  for (Eigen::Index d = 0; d < actual.cols(); ++d) {
    DimensionMetrics m;
    m.actual = actual.col(d);
    m.predicted = predicted.col(d);
    m.r2 = r_squared(m.actual, m.predicted);
    m.rmse = rmse(m.actual, m.predicted);
    r.dims.push_back(std::move(m));
  }
  r.physical = physical_reconstruction_error(predicted, ae, truth);
  r.sorted = sorted_errors(r.physical.predicted);
  r.kde = error_kde(Eigen::Map<const Eigen::VectorXd>(r.physical.predicted.data(),
                                                      static_cast<Eigen::Index>(r.physical.predicted.size())));
  r.outlier_factor = outlier_factor;
  r.outlier_fraction = outlier_fraction(r.physical.predicted, outlier_factor);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  r.mean_physical = mean(r.physical.predicted);
  r.mean_floor = mean(r.physical.floor);
  return r;
}

nlohmann::json report_summary(const EvalReport& r, const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["format"] = "wakereport1";
  j["model"] = r.model;
  j["test_set_hash"] = r.test_set_hash;
  j["test_size"] = r.physical.predicted.size();
  nlohmann::json dims = nlohmann::json::array();
  for (std::size_t d = 0; d < r.dims.size(); ++d) {
    dims.push_back({{"dim", d}, {"r2", r.dims[d].r2}, {"rmse", r.dims[d].rmse}});
  }
  j["dimensions"] = dims;
  j["physical"] = {{"mean_normalized_mse", r.mean_physical},
                   {"mean_decoded_exact_floor", r.mean_floor},
                   {"outlier_factor", r.outlier_factor},
                   {"outlier_fraction", r.outlier_fraction},
                   {"kde_bandwidth", r.kde.bandwidth},
                   {"kde_integral", r.kde.integral()}};
  j["config"] = config_echo;
  return j;
}

void write_report(const std::filesystem::path& dir, const EvalReport& r,
                  const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "report.json");
    if (!os) throw IoError("cannot write " + (dir / "report.json").string());
    os << report_summary(r, config_echo).dump(2) << '\n';
  }
  for (std::size_t d = 0; d < r.dims.size(); ++d) {
    Eigen::MatrixXd pairs(r.dims[d].actual.size(), 2);
    pairs << r.dims[d].actual, r.dims[d].predicted;
    write_csv(dir / ("pairs_z" + std::to_string(d) + ".csv"), {"actual", "predicted"}, pairs);
  }
  const auto n = static_cast<Eigen::Index>(r.physical.predicted.size());
  Eigen::MatrixXd phys(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    phys(i, 0) = static_cast<double>(i);
    phys(i, 1) = r.physical.predicted[static_cast<std::size_t>(i)];
    phys(i, 2) = r.physical.floor[static_cast<std::size_t>(i)];
  }
  write_csv(dir / "physical_errors.csv", {"index", "normalized_mse", "decoded_exact_floor"}, phys);
  Eigen::MatrixXd sorted(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted(i, 0) = static_cast<double>(i);
    sorted(i, 1) = r.sorted[static_cast<std::size_t>(i)];
  }
  write_csv(dir / "sorted_errors.csv", {"rank", "normalized_mse"}, sorted);
  Eigen::MatrixXd kde(r.kde.x.size(), 2);
  kde << r.kde.x, r.kde.density;
  write_csv(dir / "kde.csv", {"error", "density"}, kde);
}

}  // namespace wake
