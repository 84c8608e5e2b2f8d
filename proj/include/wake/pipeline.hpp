#pragma once

// End-to-end experiment: dataset -> autoencoder -> latents -> regressors
// (MLP, GP, SVGP, active-learning GP) -> evaluation reports -> comparison.
//
// Output layout under the configured directory:
//
//   config.json               normalized config echo
//   data/train, data/test     datasets (manifest.json + scans/)
//   data/{train,test}_params.csv
//   ae/model.ae, ae/loss.csv
//   latents/{train,test}.csv
//   models/mlp.json, models/{gp,svgp,algp}_z<d>.json
//   al/trace_z<d>.csv, al/summary.json
//   reports/<model>/...       one EvalReport per regressor
//   comparison.csv, comparison.json
//   manifest.json             sha256 of every artifact above
//
// A failing stage leaves FAILED and error.json next to the partial output.

#include <Eigen/Dense>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "wake/active_learning.hpp"
#include "wake/autoencoder.hpp"
#include "wake/gp.hpp"
#include "wake/metrics.hpp"
#include "wake/mlp.hpp"
#include "wake/svgp.hpp"
#include "wake/wakegen.hpp"

namespace wake {

struct ExperimentConfig {
  std::filesystem::path output_dir = "out";

  // dataset
  std::size_t n_train = 5000;
  std::size_t n_test = 1781;
  double noise_sd = 0.03;
  double dropout_rate = 0.1;
  double anomaly_rate = 0.0;
  std::uint64_t data_seed = 0;

  // autoencoder
  AeTrainConfig ae;

  // regressors
  MlpTrainConfig mlp;
  GpFitConfig gp;
  SvgpFitConfig svgp;
  AlConfig al;
  std::size_t one_shot_size = 250;
  std::vector<std::size_t> q_sweep;  // extra AL runs at these batch sizes

  double outlier_factor = 3.0;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Parses and validates. Every block must carry an explicit "seed".
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Desk-scale defaults (pool 1000, test 300).
ExperimentConfig desk_scale_config();

struct PipelineResult {
  int exit_code = 0;
  bool skipped = false;     // outputs already matched the config
  std::string failed_stage;
  nlohmann::json manifest;
};

/// Runs every stage. Unless `force` is set, returns immediately when the
/// existing manifest matches the config and all artifact hashes.
PipelineResult run_pipeline(const ExperimentConfig& config, bool force = false);

/// Generates a dataset into <dir> (manifest.json, scans/) plus
/// <dir>/params.csv for the regressor commands.
void generate_to_dir(const GeneratorConfig& config, const std::filesystem::path& dir);

/// Hash identifying a dataset directory (manifest plus every scan file).
std::string dataset_hash(const std::filesystem::path& dir);

/// Actual latents of the test scans are taken from the encoder.
EvalReport evaluate_latent_predictions(const std::string& model, const AeParams& ae,
                                       const Dataset& test, const std::string& test_hash,
                                       const Eigen::MatrixXd& predicted, double outlier_factor);

/// Side-by-side table of report.json files. Throws TestSetMismatch when the
/// test-set hashes differ. Deltas are relative to the first report.
nlohmann::json compare_reports(const std::vector<std::filesystem::path>& reports);
void write_comparison(const std::filesystem::path& dir, const nlohmann::json& comparison);

/// Latent matrix (n x k) of a list of scans.
Eigen::MatrixXd encode_scans(const AeParams& ae, const std::vector<ScanGrid>& scans);

/// Writes an AL trace table: repetition, step, selected_index,
/// integrated_variance, log_rmse (one row per selected point).
void write_al_trace(const std::filesystem::path& path, const std::vector<AlTrace>& traces);

}  // namespace wake
