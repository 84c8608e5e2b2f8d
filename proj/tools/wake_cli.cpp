// wake: command-line front end for every stage of the surrogate pipeline.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "wake/active_learning.hpp"
#include "wake/autoencoder.hpp"
#include "wake/csv.hpp"
#include "wake/errors.hpp"
#include "wake/gp.hpp"
#include "wake/metrics.hpp"
#include "wake/mlp.hpp"
#include "wake/model_io.hpp"
#include "wake/pipeline.hpp"
#include "wake/scan_io.hpp"
#include "wake/svgp.hpp"

namespace fs = std::filesystem;
using namespace wake;

namespace {

nlohmann::json echo_args(const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
  nlohmann::json j{{"command", command}};
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

void write_prediction_csv(const fs::path& path, const GpPrediction& p) {
  Eigen::MatrixXd m(p.mean.size(), 3);
  for (Eigen::Index i = 0; i < p.mean.size(); ++i) m(i, 0) = static_cast<double>(i);
  m.col(1) = p.mean;
  m.col(2) = p.variance;
  write_csv(path, {"index", "mean", "variance"}, m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wake-field surrogate toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scan dataset");
  GeneratorConfig gcfg;
  fs::path gen_out;
  gen->add_option("--n", gcfg.n, "Number of scans")->default_val(5000);
  gen->add_option("--noise", gcfg.noise_sd, "Measurement noise sd")->default_val(0.03);
  gen->add_option("--dropout", gcfg.dropout_rate, "Per-cell dropout rate")->default_val(0.1);
  gen->add_option("--anomaly-rate", gcfg.anomaly_rate, "Fraction of scans with a speed-up feature")->default_val(0.0);
  gen->add_option("--seed", gcfg.seed, "Seed")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // ae
  auto* ae = app.add_subcommand("ae", "Autoencoder training, encoding and reconstruction");
  ae->require_subcommand(1);
  auto* ae_train_cmd = ae->add_subcommand("train", "Train an autoencoder on a dataset");
  AeTrainConfig acfg;
  fs::path ae_data, ae_out, ae_model, ae_scan;
  ae_train_cmd->add_option("--data", ae_data, "Dataset directory")->required();
  ae_train_cmd->add_option("--epochs", acfg.epochs)->default_val(50);
  ae_train_cmd->add_option("--batch", acfg.batch_size)->default_val(32);
  ae_train_cmd->add_option("--lr", acfg.adam.learning_rate)->default_val(1e-3);
  ae_train_cmd->add_option("--latent-dim", acfg.arch.latent_dim)->default_val(4);
  ae_train_cmd->add_option("--seed", acfg.seed)->required();
  ae_train_cmd->add_option("--out", ae_out, "Model file")->required();
  auto* ae_encode_cmd = ae->add_subcommand("encode", "Encode every scan of a dataset");
  ae_encode_cmd->add_option("--model", ae_model)->required();
  ae_encode_cmd->add_option("--data", ae_data)->required();
  ae_encode_cmd->add_option("--out", ae_out, "Latent CSV")->required();
  auto* ae_recon_cmd = ae->add_subcommand("recon", "Encode and decode one scan file");
  ae_recon_cmd->add_option("--model", ae_model)->required();
  ae_recon_cmd->add_option("--scan", ae_scan)->required();
  ae_recon_cmd->add_option("--out", ae_out, "Scan file")->required();

  // mlp
  auto* mlp = app.add_subcommand("mlp", "Multilayer perceptron regressor");
  mlp->require_subcommand(1);
  MlpTrainConfig mcfg;
  fs::path latents_csv, params_csv, model_path, out_path;
  auto* mlp_train_cmd = mlp->add_subcommand("train", "Fit params -> latents");
  mlp_train_cmd->add_option("--latents", latents_csv)->required();
  mlp_train_cmd->add_option("--params", params_csv)->required();
  mlp_train_cmd->add_option("--epochs", mcfg.epochs)->default_val(500);
  mlp_train_cmd->add_option("--batch", mcfg.batch_size)->default_val(32);
  mlp_train_cmd->add_option("--lr", mcfg.adam.learning_rate)->default_val(1e-3);
  mlp_train_cmd->add_option("--seed", mcfg.seed)->required();
  mlp_train_cmd->add_option("--out", out_path)->required();
  auto* mlp_predict_cmd = mlp->add_subcommand("predict", "Predict latents");
  mlp_predict_cmd->add_option("--model", model_path)->required();
  mlp_predict_cmd->add_option("--params", params_csv)->required();
  mlp_predict_cmd->add_option("--out", out_path)->required();

  // gp / svgp
  std::size_t dim = 0;
  GpFitConfig gpcfg;
  SvgpFitConfig svcfg;
  auto* gp = app.add_subcommand("gp", "Exact Gaussian process on one latent dimension");
  gp->require_subcommand(1);
  auto* gp_fit_cmd = gp->add_subcommand("fit", "Maximum-likelihood fit");
  gp_fit_cmd->add_option("--latents", latents_csv)->required();
  gp_fit_cmd->add_option("--params", params_csv)->required();
  gp_fit_cmd->add_option("--dim", dim)->required();
  gp_fit_cmd->add_option("--starts", gpcfg.starts)->default_val(8);
  gp_fit_cmd->add_option("--seed", gpcfg.seed)->default_val(0);
  gp_fit_cmd->add_option("--out", out_path)->required();
  auto* gp_predict_cmd = gp->add_subcommand("predict", "Posterior mean and variance");
  gp_predict_cmd->add_option("--model", model_path)->required();
  gp_predict_cmd->add_option("--params", params_csv)->required();
  gp_predict_cmd->add_option("--out", out_path)->required();

  auto* sv = app.add_subcommand("svgp", "Sparse variational GP on one latent dimension");
  sv->require_subcommand(1);
  auto* sv_fit_cmd = sv->add_subcommand("fit", "Maximize the collapsed bound");
  sv_fit_cmd->add_option("--latents", latents_csv)->required();
  sv_fit_cmd->add_option("--params", params_csv)->required();
  sv_fit_cmd->add_option("--dim", dim)->required();
  sv_fit_cmd->add_option("--m", svcfg.inducing)->default_val(64);
  sv_fit_cmd->add_option("--starts", svcfg.starts)->default_val(2);
  sv_fit_cmd->add_option("--seed", svcfg.seed)->required();
  sv_fit_cmd->add_option("--out", out_path)->required();
  auto* sv_predict_cmd = sv->add_subcommand("predict", "Predictive mean and variance");
  sv_predict_cmd->add_option("--model", model_path)->required();
  sv_predict_cmd->add_option("--params", params_csv)->required();
  sv_predict_cmd->add_option("--out", out_path)->required();

  // al
  auto* al = app.add_subcommand("al", "Active learning for the exact GP");
  al->require_subcommand(1);
  auto* al_run_cmd = al->add_subcommand("run", "Sequential design with a held-out test set");
  AlConfig alcfg;
  fs::path test_latents, test_params, summary_path;
  std::size_t one_shot = 0;
  bool frozen = false;
  al_run_cmd->add_option("--latents", latents_csv, "Pool latents")->required();
  al_run_cmd->add_option("--params", params_csv, "Pool parameters")->required();
  al_run_cmd->add_option("--test-latents", test_latents)->required();
  al_run_cmd->add_option("--test-params", test_params)->required();
  al_run_cmd->add_option("--dim", dim)->required();
  al_run_cmd->add_option("--n0", alcfg.n0)->default_val(50);
  al_run_cmd->add_option("--steps", alcfg.steps)->default_val(100);
  al_run_cmd->add_option("--q", alcfg.q)->default_val(1);
  al_run_cmd->add_option("--reps", alcfg.repetitions)->default_val(20);
  al_run_cmd->add_option("--reference-size", alcfg.reference_size)->default_val(512);
  al_run_cmd->add_option("--one-shot", one_shot, "Also fit one-shot GPs of this size")->default_val(0);
  al_run_cmd->add_flag("--frozen", frozen, "Keep the initial hyperparameters");
  al_run_cmd->add_option("--seed", alcfg.seed)->required();
  al_run_cmd->add_option("--summary", summary_path, "Optional JSON summary");
  al_run_cmd->add_option("--out", out_path, "Trace CSV")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluation report for latent predictions");
  fs::path ev_test;
  std::string ev_name = "model";
  double outlier_factor = 3.0;
  ev->add_option("--ae", model_path, "Autoencoder model")->required();
  ev->add_option("--test-data", ev_test, "Test dataset directory")->required();
  ev->add_option("--predictions", latents_csv, "Predicted latents CSV")->required();
  ev->add_option("--name", ev_name);
  ev->add_option("--outlier-factor", outlier_factor)->default_val(3.0);
  ev->add_option("--out", out_path, "Report directory")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "Consolidate evaluation reports");
  std::vector<fs::path> report_paths;
  cmp->add_option("--reports", report_paths, "report.json files")->required()->expected(2, -1);
  cmp->add_option("--out", out_path, "Output directory")->required();

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run every stage from one config file");
  fs::path config_path, write_default;
  fs::path pl_out;
  bool force = false;
  pl->add_option("--config", config_path, "Experiment config (JSON)");
  pl->add_option("--out", pl_out, "Override the output directory");
  pl->add_option("--write-default", write_default, "Write the desk-scale config and exit");
  pl->add_flag("--force", force, "Recompute even if outputs match the config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      generate_to_dir(gcfg, gen_out);
      std::cout << "wrote " << gcfg.n << " scans to " << gen_out << '\n';
    } else if (*ae_train_cmd) {
      const Dataset ds = read_dataset(ae_data);
      const AeTrainResult r = ae_train(ds.scans, acfg);
      save_ae(ae_out, r.params,
              echo_args("ae train", {{"data", ae_data.string()},
                                     {"epochs", std::to_string(acfg.epochs)},
                                     {"seed", std::to_string(acfg.seed)}}));
      std::cout << "final loss " << r.loss_history.back() << '\n';
    } else if (*ae_encode_cmd) {
      const AeParams p = load_ae(ae_model);
      write_latents_csv(ae_out, encode_scans(p, read_dataset(ae_data).scans));
    } else if (*ae_recon_cmd) {
      const AeParams p = load_ae(ae_model);
      write_scan_file(ae_out, ae_forward(p, read_scan_file(ae_scan)).reconstruction);
    } else if (*mlp_train_cmd) {
      const MlpModelFit fit = fit_mlp_model(read_params_csv(params_csv), read_latents_csv(latents_csv), mcfg);
      save_mlp(out_path, fit.model,
               echo_args("mlp train", {{"latents", latents_csv.string()},
                                       {"params", params_csv.string()},
                                       {"seed", std::to_string(mcfg.seed)}}));
      std::cout << "final loss " << fit.loss_history.back() << '\n';
    } else if (*mlp_predict_cmd) {
      write_latents_csv(out_path, load_mlp(model_path).predict(read_params_csv(params_csv)));
    } else if (*gp_fit_cmd || *sv_fit_cmd) {
      const DataRef ref{params_csv, latents_csv, dim, {}};
      Eigen::MatrixXd x;
      Eigen::VectorXd y;
      load_training_data(ref, x, y);
      if (*gp_fit_cmd) {
        const GpRegressor r = fit_gp_regressor(x, y, gpcfg);
        save_gp(out_path, r, ref, echo_args("gp fit", {{"dim", std::to_string(dim)}}));
        std::cout << "lengthscale " << r.gp.hyper().lengthscale << " noise "
                  << r.gp.hyper().noise_variance << " loglik " << r.gp.loglik() << '\n';
      } else {
        const SvgpRegressor r = fit_svgp_regressor(x, y, svcfg);
        save_svgp(out_path, r, ref,
                  echo_args("svgp fit", {{"dim", std::to_string(dim)}, {"m", std::to_string(svcfg.inducing)}}));
        std::cout << "lengthscale " << r.gp.hyper().lengthscale << " noise "
                  << r.gp.hyper().noise_variance << " elbo " << r.gp.elbo() << '\n';
      }
    } else if (*gp_predict_cmd) {
      write_prediction_csv(out_path, load_gp(model_path).predict(read_params_csv(params_csv)));
    } else if (*sv_predict_cmd) {
      write_prediction_csv(out_path, load_svgp(model_path).predict(read_params_csv(params_csv)));
    } else if (*al_run_cmd) {
      alcfg.refit = !frozen;
      const Eigen::MatrixXd px = read_params_csv(params_csv);
      const Eigen::MatrixXd pz = read_latents_csv(latents_csv);
      const Eigen::MatrixXd tx = read_params_csv(test_params);
      const Eigen::MatrixXd tz = read_latents_csv(test_latents);
      if (dim >= static_cast<std::size_t>(pz.cols()) || dim >= static_cast<std::size_t>(tz.cols()))
        throw ShapeMismatch("latent dimension out of range");
      const auto d = static_cast<Eigen::Index>(dim);
      const std::vector<AlTrace> traces = al_run(px, pz.col(d), tx, tz.col(d), alcfg);
      write_al_trace(out_path, traces);
      double final_mean = 0.0;
      for (const AlTrace& t : traces) final_mean += t.steps.back().log_rmse / static_cast<double>(traces.size());
      nlohmann::json summary{{"dim", dim}, {"mean_final_log_rmse", final_mean}};
      std::cout << "mean final log RMSE " << final_mean << '\n';
      if (one_shot > 0) {
        const std::vector<double> os = one_shot_log_rmse(px, pz.col(d), tx, tz.col(d), one_shot, alcfg);
        double m = 0.0;
        for (double v : os) m += v / static_cast<double>(os.size());
        summary["one_shot_size"] = one_shot;
        summary["one_shot_mean_log_rmse"] = m;
        std::cout << "one-shot (" << one_shot << " points) mean log RMSE " << m << '\n';
      }
      if (!summary_path.empty()) write_json_file(summary_path, summary);
    } else if (*ev) {
      const AeParams p = load_ae(model_path);
      const Dataset test = read_dataset(ev_test);
      const EvalReport r = evaluate_latent_predictions(ev_name, p, test, dataset_hash(ev_test),
                                                       read_latents_csv(latents_csv), outlier_factor);
      write_report(out_path, r, echo_args("evaluate", {{"predictions", latents_csv.string()}}));
      std::cout << "mean normalized MSE " << r.mean_physical << " (decoded-exact floor "
                << r.mean_floor << ")\n";
    } else if (*cmp) {
      write_comparison(out_path, compare_reports(report_paths));
    } else if (*pl) {
      if (!write_default.empty()) {
        ExperimentConfig c = desk_scale_config();
        c.output_dir = pl_out.empty() ? fs::path("out") : pl_out;
        write_json_file(write_default, to_json(c));
        return 0;
      }
      if (config_path.empty()) throw ConfigError("pipeline needs --config (or --write-default)");
      ExperimentConfig c = load_experiment_config(config_path);
      if (!pl_out.empty()) c.output_dir = pl_out;
      const PipelineResult r = run_pipeline(c, force);
      if (r.skipped) std::cout << "outputs already match the config; nothing to do\n";
      if (r.exit_code != 0) {
        std::cerr << "pipeline failed in stage '" << r.failed_stage << "'; see "
                  << (c.output_dir / "error.json") << '\n';
      }
      return r.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
