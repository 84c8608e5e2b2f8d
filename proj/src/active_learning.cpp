#include "wake/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "wake/errors.hpp"
#include "wake/parallel.hpp"
#include "wake/wakegen.hpp"

namespace wake {

namespace {

constexpr std::uint64_t kReferenceStream = 0x5245464552454e43ULL;

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::size_t> shuffled_rows(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

Eigen::MatrixXd reference_set(const Eigen::MatrixXd& pool, const AlConfig& config) {
  return latin_hypercube(config.reference_size, pool.colwise().minCoeff(),
                         pool.colwise().maxCoeff(), derive_seed(config.seed, kReferenceStream));
}

}  // namespace

LogRmse log_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
  if (predicted.size() != actual.size()) throw ShapeMismatch("log RMSE: length mismatch");
  if (actual.size() == 0) throw PreconditionViolated("log RMSE needs a non-empty test set");
  const double mse = (predicted - actual).squaredNorm() / static_cast<double>(actual.size());
  if (mse < 1e-300) return {kLogRmseFloor, true};
  return {0.5 * std::log(mse), false};
}

double integrated_variance(const GpModel& model, const Eigen::MatrixXd& reference) {
  const Eigen::MatrixXd v = model.whiten(reference);
  return (1.0 - v.colwise().squaredNorm().array()).max(0.0).mean();
}

double expected_ivar_reduction(const GpModel& model, const Eigen::RowVectorXd& candidate,
                               const Eigen::MatrixXd& reference) {
  if (reference.rows() == 0) throw PreconditionViolated("empty reference set");
  const Eigen::MatrixXd vr = model.whiten(reference);
  const Eigen::MatrixXd vc = model.whiten(candidate);
  const Eigen::VectorXd cov = model.kernel().cross(reference, candidate).col(0) - vr.transpose() * vc.col(0);
  const double var = std::max(0.0, 1.0 - vc.squaredNorm());
  return cov.squaredNorm() / (var + model.effective_noise()) / static_cast<double>(reference.rows());
}

BatchSelection select_batch(const GpModel& model, const Eigen::MatrixXd& pool,
                            const std::vector<std::uint8_t>& excluded,
                            const Eigen::MatrixXd& reference, std::size_t q) {
  const auto p = static_cast<std::size_t>(pool.rows());
  if (excluded.size() != p) throw ShapeMismatch("exclusion mask does not match the pool");
  if (reference.rows() == 0) throw PreconditionViolated("empty reference set");
  const auto available = static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), 0));
  if (q == 0 || available < q)
    throw PoolExhausted("pool has " + std::to_string(available) + " candidates, batch needs " +
                        std::to_string(q));

  const Matern32 k = model.kernel();
  const double noise = model.effective_noise();
  const auto nr = static_cast<double>(reference.rows());
  const Eigen::MatrixXd vp = model.whiten(pool);
  const Eigen::MatrixXd vr = model.whiten(reference);
  // Posterior covariance between reference points and candidates, updated
  // in place as picks are conditioned on.
  Eigen::MatrixXd c = k.cross(reference, pool);
  c.noalias() -= vr.transpose() * vp;
  Eigen::VectorXd var_p = (1.0 - vp.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  Eigen::VectorXd var_r = (1.0 - vr.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  Eigen::MatrixXd up(static_cast<Eigen::Index>(p), 0);

  BatchSelection out;
  out.ivar_before = var_r.mean();
  std::vector<std::uint8_t> taken = excluded;
  for (std::size_t t = 0; t < q; ++t) {
    const Eigen::VectorXd colsq = c.colwise().squaredNorm().transpose();
    std::size_t best = p;
    double best_score = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (taken[j]) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const double score = colsq(jj) / (var_p(jj) + noise) / nr;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    const auto b = static_cast<Eigen::Index>(best);
    taken[best] = 1;
    out.indices.push_back(best);
    out.scores.push_back(best_score);

    const double denom = std::sqrt(var_p(b) + noise);
    Eigen::VectorXd cp = k.cross(pool, pool.row(b)).col(0);
    cp.noalias() -= vp.transpose() * vp.col(b);
    if (up.cols() > 0) cp.noalias() -= up * up.row(b).transpose();
    const Eigen::VectorXd u_p = cp / denom;
    const Eigen::VectorXd u_r = c.col(b) / denom;
    c.noalias() -= u_r * u_p.transpose();
    var_p = (var_p.array() - u_p.array().square()).max(0.0).matrix();
    var_r = (var_r.array() - u_r.array().square()).max(0.0).matrix();
    up.conservativeResize(Eigen::NoChange, up.cols() + 1);
    up.col(up.cols() - 1) = u_p;
  }
  out.ivar_after = var_r.mean();
  return out;
}

Eigen::MatrixXd latin_hypercube(std::size_t n, const Eigen::RowVectorXd& lo,
                                const Eigen::RowVectorXd& hi, std::uint64_t seed) {
  if (lo.size() != hi.size()) throw ShapeMismatch("hypercube bounds differ in dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), lo.size());
  std::vector<std::size_t> perm(n);
  for (Eigen::Index d = 0; d < lo.size(); ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(n);
      out(static_cast<Eigen::Index>(i), d) = lo(d) + u * (hi(d) - lo(d));
    }
  }
  return out;
}

void AlConfig::validate(std::size_t pool_size) const {
  if (n0 < 2) throw ConfigError("active learning needs n0 >= 2");
  if (q < 1) throw ConfigError("batch size q must be at least 1");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (reference_size < 1) throw ConfigError("reference set must be non-empty");
  if (n0 + steps * q > pool_size)
    throw ConfigError("n0 + steps * q = " + std::to_string(n0 + steps * q) +
                      " exceeds the pool size " + std::to_string(pool_size));
}

std::vector<AlTrace> al_run(const Eigen::MatrixXd& pool_x, const Eigen::VectorXd& pool_y,
                            const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y,
                            const AlConfig& config) {
  if (pool_x.rows() != pool_y.size() || test_x.rows() != test_y.size())
    throw ShapeMismatch("active learning inputs and targets differ in length");
  config.validate(static_cast<std::size_t>(pool_x.rows()));
  const InputScaler scaler = InputScaler::fit(pool_x);
  const Eigen::MatrixXd pool = scaler.transform(pool_x);
  const Eigen::MatrixXd test = scaler.transform(test_x);
  const Eigen::MatrixXd reference = reference_set(pool, config);

  std::vector<AlTrace> traces(config.repetitions);
  parallel_for(config.repetitions, [&](std::size_t rep) {
    AlTrace& trace = traces[rep];
    trace.repetition = rep;
    trace.seed = derive_seed(config.seed, rep + 1);
    std::vector<std::size_t> rows = shuffled_rows(static_cast<std::size_t>(pool.rows()), trace.seed);
    rows.resize(config.n0);
    trace.initial = rows;
    std::vector<std::uint8_t> excluded(static_cast<std::size_t>(pool.rows()), 0);
    for (std::size_t r : rows) excluded[r] = 1;

    TargetScaler ts = TargetScaler::fit(take(pool_y, rows));
    GpFitConfig fit_config;
    fit_config.starts = config.initial_starts;
    fit_config.seed = trace.seed;
    GpModel model = gp_fit(take_rows(pool, rows), ts.transform(take(pool_y, rows)), config.init,
                           fit_config);

    auto record = [&](AlStep& s) {
      s.ivar = integrated_variance(model, reference);
      const Eigen::VectorXd mean = (model.predict(test).mean.array() * ts.sd + ts.mean).matrix();
      const LogRmse lr = log_rmse(mean, test_y);
      s.log_rmse = lr.value;
      s.exact_fit = lr.exact_fit;
      s.hyper = model.hyper();
    };
    AlStep first;
    record(first);
    first.ivar_before = first.ivar_after_fixed = first.ivar;
    trace.steps.push_back(first);

    for (std::size_t step = 1; step <= config.steps; ++step) {
      const BatchSelection sel = select_batch(model, pool, excluded, reference, config.q);
      for (std::size_t r : sel.indices) {
        excluded[r] = 1;
        rows.push_back(r);
      }
      const Eigen::MatrixXd x = take_rows(pool, rows);
      if (config.refit) {
        ts = TargetScaler::fit(take(pool_y, rows));
        GpFitConfig warm;
        warm.starts = 1;
        warm.seed = derive_seed(trace.seed, step);
        model = gp_fit(x, ts.transform(take(pool_y, rows)), model.hyper(), warm);
      } else {
        model = GpModel::assemble(x, ts.transform(take(pool_y, rows)), model.hyper());
      }
      AlStep s;
      s.step = step;
      s.selected = sel.indices;
      s.ivar_before = sel.ivar_before;
      s.ivar_after_fixed = sel.ivar_after;
      record(s);
      trace.steps.push_back(std::move(s));
    }
  });
  return traces;
}

std::vector<double> one_shot_log_rmse(const Eigen::MatrixXd& pool_x, const Eigen::VectorXd& pool_y,
                                      const Eigen::MatrixXd& test_x, const Eigen::VectorXd& test_y,
                                      std::size_t size, const AlConfig& config) {
  if (size < 2 || size > static_cast<std::size_t>(pool_x.rows()))
    throw ConfigError("one-shot size must lie in [2, pool size]");
  const InputScaler scaler = InputScaler::fit(pool_x);
  const Eigen::MatrixXd pool = scaler.transform(pool_x);
  const Eigen::MatrixXd test = scaler.transform(test_x);
  std::vector<double> out(config.repetitions);
  parallel_for(config.repetitions, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.seed, rep + 1);
    std::vector<std::size_t> rows = shuffled_rows(static_cast<std::size_t>(pool.rows()), seed);
    rows.resize(size);
    const Eigen::VectorXd y = take(pool_y, rows);
    const TargetScaler ts = TargetScaler::fit(y);
    GpFitConfig fit_config;
    fit_config.starts = config.initial_starts;
    fit_config.seed = seed;
    const GpModel model = gp_fit(take_rows(pool, rows), ts.transform(y), config.init, fit_config);
    const Eigen::VectorXd mean = (model.predict(test).mean.array() * ts.sd + ts.mean).matrix();
    out[rep] = log_rmse(mean, test_y).value;
  });
  return out;
}

}  // namespace wake
