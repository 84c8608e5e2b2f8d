#include "wake/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>

#include "wake/csv.hpp"
#include "wake/errors.hpp"
#include "wake/hash.hpp"
#include "wake/model_io.hpp"
#include "wake/parallel.hpp"
#include "wake/scan_io.hpp"

namespace wake {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& block, const char* key, T fallback) {
  return block.contains(key) ? block.at(key).get<T>() : fallback;
}

std::uint64_t require_seed(const json& root, const char* block) {
  if (!root.contains(block) || !root.at(block).contains("seed"))
    throw ConfigError(std::string("config block '") + block + "' needs an explicit seed");
  return root.at(block).at("seed").get<std::uint64_t>();
}

Dataset subset(const Dataset& ds, std::size_t begin, std::size_t end) {
  Dataset out;
  out.seed = ds.seed;
  out.config = ds.config;
  out.config.n = end - begin;
  out.params.assign(ds.params.begin() + static_cast<std::ptrdiff_t>(begin),
                    ds.params.begin() + static_cast<std::ptrdiff_t>(end));
  out.scans.assign(ds.scans.begin() + static_cast<std::ptrdiff_t>(begin),
                   ds.scans.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

json config_echo(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");  // artifacts must not depend on where they live
  return j;
}

std::vector<fs::path> artifact_files(const fs::path& out) {
  std::vector<fs::path> files;
  if (!fs::exists(out)) return files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), out);
    const std::string name = rel.generic_string();
    if (name == "manifest.json" || name == "FAILED" || name == "error.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  return files;
}

json build_manifest(const fs::path& out, const std::string& config_hash) {
  json artifacts = json::array();
  for (const fs::path& rel : artifact_files(out)) {
    artifacts.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(out / rel)}});
  }
  return {{"format", "wakemanifest1"}, {"config_hash", config_hash}, {"artifacts", artifacts}};
}

bool up_to_date(const fs::path& out, const std::string& config_hash, json& manifest) {
  const fs::path path = out / "manifest.json";
  if (!fs::exists(path) || fs::exists(out / "FAILED")) return false;
  try {
    manifest = read_json_file(path);
    if (manifest.at("config_hash") != config_hash) return false;
    for (const auto& a : manifest.at("artifacts")) {
      const fs::path p = out / a.at("path").get<std::string>();
      if (!fs::exists(p) || sha256_file(p) != a.at("sha256").get<std::string>()) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

Eigen::MatrixXd predict_gp_files(const fs::path& models, const std::string& prefix, std::size_t k,
                                 const Eigen::MatrixXd& x, bool sparse) {
  Eigen::MatrixXd pred(x.rows(), static_cast<Eigen::Index>(k));
  parallel_for(k, [&](std::size_t d) {
    const fs::path p = models / (prefix + "_z" + std::to_string(d) + ".json");
    pred.col(static_cast<Eigen::Index>(d)) =
        sparse ? load_svgp(p).predict(x).mean : load_gp(p).predict(x).mean;
  });
  return pred;
}

std::string csv_field(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return format_double(v.get<double>());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_test == 0) throw ConfigError("n_test must be positive");
  if (n_train < 2) throw ConfigError("n_train must be at least 2");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be non-negative");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 0.3)) throw ConfigError("dropout_rate must lie in [0, 0.3]");
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0)) throw ConfigError("anomaly_rate must lie in [0, 1]");
  if (ae.epochs < 1 || ae.batch_size < 1) throw ConfigError("autoencoder epochs and batch size must be positive");
  try {
    ae.arch.validate();
  } catch (const ShapeMismatch& e) {
    throw ConfigError(std::string("autoencoder architecture: ") + e.what());
  }
  if (ae.arch.latent_dim < 1) throw ConfigError("latent dimension must be positive");
  if (mlp.epochs < 1 || mlp.batch_size < 1) throw ConfigError("MLP epochs and batch size must be positive");
  if (gp.starts < 1) throw ConfigError("GP needs at least one start");
  if (svgp.inducing < 1 || svgp.inducing > n_train) throw ConfigError("SVGP inducing count must lie in [1, n_train]");
  if (svgp.starts < 1) throw ConfigError("SVGP needs at least one start");
  al.validate(n_train);
  if (one_shot_size < 2 || one_shot_size > n_train) throw ConfigError("one_shot_size must lie in [2, n_train]");
  for (std::size_t q : q_sweep) {
    if (q < 1 || q > 8) throw ConfigError("q_sweep entries must lie in [1, 8]");
  }
  if (!(outlier_factor > 0.0)) throw ConfigError("outlier factor must be positive");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.output_dir = get_or<std::string>(j, "output_dir", "out");
    const json empty = json::object();
    const json& d = j.contains("dataset") ? j.at("dataset") : empty;
    c.n_train = get_or<std::size_t>(d, "n_train", c.n_train);
    c.n_test = get_or<std::size_t>(d, "n_test", c.n_test);
    c.noise_sd = get_or<double>(d, "noise_sd", c.noise_sd);
    c.dropout_rate = get_or<double>(d, "dropout_rate", c.dropout_rate);
    c.anomaly_rate = get_or<double>(d, "anomaly_rate", c.anomaly_rate);
    c.data_seed = require_seed(j, "dataset");

    const json& a = j.contains("autoencoder") ? j.at("autoencoder") : empty;
    c.ae.arch.latent_dim = get_or<std::size_t>(a, "latent_dim", c.ae.arch.latent_dim);
    c.ae.arch.encoder_channels = get_or(a, "encoder_channels", c.ae.arch.encoder_channels);
    c.ae.arch.decoder_channels = get_or(a, "decoder_channels", c.ae.arch.decoder_channels);
    c.ae.epochs = get_or<std::size_t>(a, "epochs", c.ae.epochs);
    c.ae.batch_size = get_or<std::size_t>(a, "batch_size", c.ae.batch_size);
    c.ae.adam.learning_rate = get_or<double>(a, "learning_rate", c.ae.adam.learning_rate);
    c.ae.seed = require_seed(j, "autoencoder");

    const json& m = j.contains("mlp") ? j.at("mlp") : empty;
    c.mlp.hidden = get_or(m, "hidden", c.mlp.hidden);
    c.mlp.epochs = get_or<std::size_t>(m, "epochs", c.mlp.epochs);
    c.mlp.batch_size = get_or<std::size_t>(m, "batch_size", c.mlp.batch_size);
    c.mlp.adam.learning_rate = get_or<double>(m, "learning_rate", c.mlp.adam.learning_rate);
    c.mlp.seed = require_seed(j, "mlp");

    const json& g = j.contains("gp") ? j.at("gp") : empty;
    c.gp.starts = get_or<std::size_t>(g, "starts", c.gp.starts);
    c.gp.seed = require_seed(j, "gp");

    const json& s = j.contains("svgp") ? j.at("svgp") : empty;
    c.svgp.inducing = get_or<std::size_t>(s, "inducing", c.svgp.inducing);
    c.svgp.starts = get_or<std::size_t>(s, "starts", c.svgp.starts);
    c.svgp.optimize_inducing = get_or<bool>(s, "optimize_inducing", c.svgp.optimize_inducing);
    c.svgp.seed = require_seed(j, "svgp");

    const json& l = j.contains("al") ? j.at("al") : empty;
    c.al.n0 = get_or<std::size_t>(l, "n0", c.al.n0);
    c.al.steps = get_or<std::size_t>(l, "steps", c.al.steps);
    c.al.q = get_or<std::size_t>(l, "q", c.al.q);
    c.al.repetitions = get_or<std::size_t>(l, "repetitions", c.al.repetitions);
    c.al.reference_size = get_or<std::size_t>(l, "reference_size", c.al.reference_size);
    c.al.initial_starts = get_or<std::size_t>(l, "initial_starts", c.al.initial_starts);
    c.one_shot_size = get_or<std::size_t>(l, "one_shot_size", c.one_shot_size);
    c.q_sweep = get_or(l, "q_sweep", c.q_sweep);
    c.al.seed = require_seed(j, "al");

    const json& e = j.contains("evaluation") ? j.at("evaluation") : empty;
    c.outlier_factor = get_or<double>(e, "outlier_factor", c.outlier_factor);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  return {{"output_dir", c.output_dir.generic_string()},
          {"dataset",
           {{"n_train", c.n_train},
            {"n_test", c.n_test},
            {"noise_sd", c.noise_sd},
            {"dropout_rate", c.dropout_rate},
            {"anomaly_rate", c.anomaly_rate},
            {"seed", c.data_seed}}},
          {"autoencoder",
           {{"latent_dim", c.ae.arch.latent_dim},
            {"encoder_channels", c.ae.arch.encoder_channels},
            {"decoder_channels", c.ae.arch.decoder_channels},
            {"epochs", c.ae.epochs},
            {"batch_size", c.ae.batch_size},
            {"learning_rate", c.ae.adam.learning_rate},
            {"seed", c.ae.seed}}},
          {"mlp",
           {{"hidden", c.mlp.hidden},
            {"epochs", c.mlp.epochs},
            {"batch_size", c.mlp.batch_size},
            {"learning_rate", c.mlp.adam.learning_rate},
            {"seed", c.mlp.seed}}},
          {"gp", {{"starts", c.gp.starts}, {"seed", c.gp.seed}}},
          {"svgp",
           {{"inducing", c.svgp.inducing},
            {"starts", c.svgp.starts},
            {"optimize_inducing", c.svgp.optimize_inducing},
            {"seed", c.svgp.seed}}},
          {"al",
           {{"n0", c.al.n0},
            {"steps", c.al.steps},
            {"q", c.al.q},
            {"repetitions", c.al.repetitions},
            {"reference_size", c.al.reference_size},
            {"initial_starts", c.al.initial_starts},
            {"one_shot_size", c.one_shot_size},
            {"q_sweep", c.q_sweep},
            {"seed", c.al.seed}}},
          {"evaluation", {{"outlier_factor", c.outlier_factor}}}};
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_json_file(path));
}

ExperimentConfig desk_scale_config() {
  ExperimentConfig c;
  c.n_train = 1000;
  c.n_test = 300;
  c.data_seed = 1;
  c.ae.epochs = 40;
  c.ae.seed = 2;
  c.mlp.epochs = 300;
  c.mlp.seed = 3;
  c.gp.starts = 4;
  c.gp.seed = 4;
  c.svgp.starts = 2;
  c.svgp.seed = 5;
  c.al.repetitions = 2;
  c.al.seed = 6;
  return c;
}

void generate_to_dir(const GeneratorConfig& config, const fs::path& dir) {
  const Dataset ds = generate_dataset(config);
  write_dataset(dir, ds);
  write_params_csv(dir / "params.csv", ds.params);
}

std::string dataset_hash(const fs::path& dir) {
  std::string acc = sha256_file(dir / "manifest.json");
  std::vector<fs::path> scans;
  for (const auto& e : fs::directory_iterator(dir / "scans")) scans.push_back(e.path());
  std::sort(scans.begin(), scans.end());
  for (const auto& p : scans) acc += sha256_file(p);
  return sha256_hex(acc);
}

Eigen::MatrixXd encode_scans(const AeParams& ae, const std::vector<ScanGrid>& scans) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(scans.size()),
                    static_cast<Eigen::Index>(ae.arch.latent_dim));
  parallel_for(scans.size(), [&](std::size_t i) {
    const LatentCode code = ae_encode(ae, scans[i]);
    for (std::size_t k = 0; k < code.z.size(); ++k)
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = code.z[k];
  });
  return z;
}

EvalReport evaluate_latent_predictions(const std::string& model, const AeParams& ae,
                                       const Dataset& test, const std::string& test_hash,
                                       const Eigen::MatrixXd& predicted, double outlier_factor) {
  const Eigen::MatrixXd actual = encode_scans(ae, test.scans);
  return evaluate_predictions(model, test_hash, actual, predicted, ae, test.scans, outlier_factor);
}

void write_al_trace(const fs::path& path, const std::vector<AlTrace>& traces) {
  std::vector<std::array<double, 5>> rows;
  for (const AlTrace& t : traces) {
    for (const AlStep& s : t.steps) {
      const auto base = std::array<double, 5>{static_cast<double>(t.repetition),
                                              static_cast<double>(s.step), -1.0, s.ivar, s.log_rmse};
      if (s.selected.empty()) {
        rows.push_back(base);
        continue;
      }
      for (std::size_t idx : s.selected) {
        auto r = base;
        r[2] = static_cast<double>(idx);
        rows.push_back(r);
      }
    }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 5);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 5; ++c) m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  write_csv(path, {"repetition", "step", "selected_index", "integrated_variance", "log_rmse"}, m);
}

json compare_reports(const std::vector<fs::path>& reports) {
  if (reports.size() < 2) throw PreconditionViolated("comparison needs at least two reports");
  std::vector<json> rs;
  for (const auto& p : reports) rs.push_back(read_json_file(p));
  const std::string hash = rs.front().at("test_set_hash").get<std::string>();
  for (std::size_t i = 1; i < rs.size(); ++i) {
    if (rs[i].at("test_set_hash").get<std::string>() != hash)
      throw TestSetMismatch(reports[i].string() + " was evaluated on a different test set");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const json& r : rs) best = std::min(best, r.at("physical").at("mean_normalized_mse").get<double>());

  const json& first = rs.front();
  json models = json::array();
  for (const json& r : rs) {
    const double phys = r.at("physical").at("mean_normalized_mse").get<double>();
    json row;
    row["model"] = r.at("model");
    row["mean_normalized_mse"] = phys;
    row["mean_decoded_exact_floor"] = r.at("physical").at("mean_decoded_exact_floor");
    row["ratio_to_best"] = best > 0.0 ? phys / best : 1.0;
    row["outlier_fraction"] = r.at("physical").at("outlier_fraction");
    row["delta_mean_normalized_mse"] = phys - first.at("physical").at("mean_normalized_mse").get<double>();
    const auto& dims = r.at("dimensions");
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const std::string sfx = "_z" + std::to_string(d);
      const auto& fd = first.at("dimensions").at(d);
      row["r2" + sfx] = dims[d].at("r2");
      row["rmse" + sfx] = dims[d].at("rmse");
      row["delta_r2" + sfx] = dims[d].at("r2").get<double>() - fd.at("r2").get<double>();
      row["delta_rmse" + sfx] = dims[d].at("rmse").get<double>() - fd.at("rmse").get<double>();
    }
    models.push_back(row);
  }
  return {{"format", "wakecompare1"}, {"test_set_hash", hash}, {"models", models}};
}

void write_comparison(const fs::path& dir, const json& comparison) {
  fs::create_directories(dir);
  write_json_file(dir / "comparison.json", comparison);
  std::ofstream os(dir / "comparison.csv");
  if (!os) throw IoError("cannot write " + (dir / "comparison.csv").string());
  const auto& models = comparison.at("models");
  std::vector<std::string> keys{"model"};
  for (const auto& [k, v] : models.front().items()) {
    if (k != "model") keys.push_back(k);
  }
  for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
  os << '\n';
  for (const auto& m : models) {
    for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << csv_field(m.at(keys[i]));
    os << '\n';
  }
}

PipelineResult run_pipeline(const ExperimentConfig& config, bool force) {
  config.validate();
  const fs::path out = config.output_dir;
  const json echo = config_echo(config);
  const std::string config_hash = sha256_hex(echo.dump());

  PipelineResult result;
  if (!force && up_to_date(out, config_hash, result.manifest)) {
    result.skipped = true;
    return result;
  }
  fs::create_directories(out);
  fs::remove(out / "FAILED");
  fs::remove(out / "error.json");
  fs::remove(out / "manifest.json");

  const std::size_t k = config.ae.arch.latent_dim;
  const fs::path data = out / "data";
  const fs::path models = out / "models";
  const fs::path latents = out / "latents";
  const fs::path reports = out / "reports";
  const std::vector<std::string> regressors{"mlp", "gp", "svgp", "algp"};

  std::string stage;
  auto run = [&](const std::string& name, const std::function<void()>& fn) {
    stage = name;
    std::cerr << "[pipeline] " << name << '\n';
    fn();
  };

  try {
    write_json_file(out / "config.json", echo);

    run("generate", [&] {
      GeneratorConfig g;
      g.n = config.n_train + config.n_test;
      g.noise_sd = config.noise_sd;
      g.dropout_rate = config.dropout_rate;
      g.anomaly_rate = config.anomaly_rate;
      g.seed = config.data_seed;
      const Dataset all = generate_dataset(g);
      const Dataset train = subset(all, 0, config.n_train);
      const Dataset test = subset(all, config.n_train, g.n);
      write_dataset(data / "train", train);
      write_dataset(data / "test", test);
      write_params_csv(data / "train_params.csv", train.params);
      write_params_csv(data / "test_params.csv", test.params);
    });

    run("autoencoder", [&] {
      const Dataset train = read_dataset(data / "train");
      const AeTrainResult r = ae_train(train.scans, config.ae);
      save_ae(out / "ae" / "model.ae", r.params, echo);
      Eigen::MatrixXd loss(static_cast<Eigen::Index>(r.loss_history.size()), 2);
      for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
        loss(static_cast<Eigen::Index>(e), 0) = static_cast<double>(e);
        loss(static_cast<Eigen::Index>(e), 1) = r.loss_history[e];
      }
      write_csv(out / "ae" / "loss.csv", {"epoch", "loss"}, loss);
    });

    run("latents", [&] {
      const AeParams ae = load_ae(out / "ae" / "model.ae");
      fs::create_directories(latents);
      write_latents_csv(latents / "train.csv", encode_scans(ae, read_dataset(data / "train").scans));
      write_latents_csv(latents / "test.csv", encode_scans(ae, read_dataset(data / "test").scans));
    });

    run("mlp", [&] {
      const MlpModelFit fit = fit_mlp_model(read_params_csv(data / "train_params.csv"),
                                            read_latents_csv(latents / "train.csv"), config.mlp);
      save_mlp(models / "mlp.json", fit.model, echo);
    });

    run("gp", [&] {
      parallel_for(k, [&](std::size_t d) {
        const DataRef ref{data / "train_params.csv", latents / "train.csv", d, {}};
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        load_training_data(ref, x, y);
        GpFitConfig gc = config.gp;
        gc.seed = derive_seed(config.gp.seed, d);
        save_gp(models / ("gp_z" + std::to_string(d) + ".json"), fit_gp_regressor(x, y, gc), ref, echo);
      });
    });

    run("svgp", [&] {
      parallel_for(k, [&](std::size_t d) {
        const DataRef ref{data / "train_params.csv", latents / "train.csv", d, {}};
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        load_training_data(ref, x, y);
        SvgpFitConfig sc = config.svgp;
        sc.seed = derive_seed(config.svgp.seed, d);
        save_svgp(models / ("svgp_z" + std::to_string(d) + ".json"), fit_svgp_regressor(x, y, sc),
                  ref, echo);
      });
    });

    run("active-learning", [&] {
      const Eigen::MatrixXd px = read_params_csv(data / "train_params.csv");
      const Eigen::MatrixXd pz = read_latents_csv(latents / "train.csv");
      const Eigen::MatrixXd tx = read_params_csv(data / "test_params.csv");
      const Eigen::MatrixXd tz = read_latents_csv(latents / "test.csv");
      json summary;
      summary["format"] = "wakeal1";
      summary["config"] = echo;
      json dims = json::array();
      for (std::size_t d = 0; d < k; ++d) {
        const auto dd = static_cast<Eigen::Index>(d);
        AlConfig ac = config.al;
        ac.seed = derive_seed(config.al.seed, d);
        const std::vector<AlTrace> traces = al_run(px, pz.col(dd), tx, tz.col(dd), ac);
        write_al_trace(out / "al" / ("trace_z" + std::to_string(d) + ".csv"), traces);
        const std::vector<double> one_shot =
            one_shot_log_rmse(px, pz.col(dd), tx, tz.col(dd), config.one_shot_size, ac);

        double al_final = 0.0, os_mean = 0.0;
        for (const AlTrace& t : traces) al_final += t.steps.back().log_rmse;
        for (double v : one_shot) os_mean += v;
        al_final /= static_cast<double>(traces.size());
        os_mean /= static_cast<double>(one_shot.size());
        json dim{{"dim", d},
                 {"mean_final_log_rmse", al_final},
                 {"one_shot_size", config.one_shot_size},
                 {"one_shot_mean_log_rmse", os_mean},
                 {"one_shot_log_rmse", one_shot}};

        json sweep = json::array();
        const std::size_t added = config.al.steps * config.al.q;
        for (std::size_t q : config.q_sweep) {
          AlConfig qc = ac;
          qc.q = q;
          qc.steps = added / q;
          const std::vector<AlTrace> qt = al_run(px, pz.col(dd), tx, tz.col(dd), qc);
          write_al_trace(out / "al" / ("sweep_q" + std::to_string(q) + "_z" + std::to_string(d) + ".csv"), qt);
          std::vector<double> curve(qt.front().steps.size(), 0.0);
          for (const AlTrace& t : qt)
            for (std::size_t s = 0; s < curve.size(); ++s) curve[s] += t.steps[s].log_rmse / static_cast<double>(qt.size());
          sweep.push_back({{"q", q}, {"steps", qc.steps}, {"mean_log_rmse", curve}});
        }
        dim["q_sweep"] = sweep;
        dims.push_back(dim);

        // The first repetition's final design becomes the AL-GP regressor.
        const AlTrace& t0 = traces.front();
        std::vector<std::size_t> rows = t0.initial;
        for (const AlStep& s : t0.steps) rows.insert(rows.end(), s.selected.begin(), s.selected.end());
        const DataRef ref{data / "train_params.csv", latents / "train.csv", d, rows};
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        load_training_data(ref, x, y);
        const GpRegressor r = assemble_gp_regressor(x, y, InputScaler::fit(px), TargetScaler::fit(y),
                                                    t0.steps.back().hyper);
        save_gp(models / ("algp_z" + std::to_string(d) + ".json"), r, ref, echo);
      }
      summary["dimensions"] = dims;
      write_json_file(out / "al" / "summary.json", summary);
    });

    run("evaluate", [&] {
      const AeParams ae = load_ae(out / "ae" / "model.ae");
      const Dataset test = read_dataset(data / "test");
      const std::string hash = dataset_hash(data / "test");
      const Eigen::MatrixXd tx = read_params_csv(data / "test_params.csv");
      for (const std::string& name : regressors) {
        Eigen::MatrixXd pred;
        if (name == "mlp") pred = load_mlp(models / "mlp.json").predict(tx);
        else pred = predict_gp_files(models, name, k, tx, name == "svgp");
        const EvalReport r = evaluate_latent_predictions(name, ae, test, hash, pred, config.outlier_factor);
        write_report(reports / name, r, echo);
        write_latents_csv(reports / name / "predictions.csv", pred);
      }
    });

    run("compare", [&] {
      std::vector<fs::path> paths;
      for (const std::string& name : regressors) paths.push_back(reports / name / "report.json");
      write_comparison(out, compare_reports(paths));
    });
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    const json record{{"stage", stage},
                      {"kind", err ? err->kind() : std::string("InternalError")},
                      {"message", e.what()}};
    write_json_file(out / "error.json", record);
    std::ofstream(out / "FAILED") << stage << '\n';
    result.exit_code = 2;
    result.failed_stage = stage;
    return result;
  }

  result.manifest = build_manifest(out, config_hash);
  write_json_file(out / "manifest.json", result.manifest);
  return result;
}

}  // namespace wake
