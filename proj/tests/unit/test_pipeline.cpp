#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "wake/errors.hpp"
#include "wake/hash.hpp"
#include "wake/model_io.hpp"
#include "wake/pipeline.hpp"

using namespace wake;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_config(const fs::path& out) {
  return {{"output_dir", out.string()},
          {"dataset", {{"n_train", 200}, {"n_test", 50}, {"seed", 1}}},
          {"autoencoder", {{"epochs", 20}, {"seed", 2}}},
          {"mlp", {{"epochs", 100}, {"seed", 3}}},
          {"gp", {{"starts", 2}, {"seed", 4}}},
          {"svgp", {{"inducing", 16}, {"seed", 5}}},
          {"al", {{"steps", 10}, {"repetitions", 2}, {"one_shot_size", 60}, {"q_sweep", {2}}, {"seed", 6}}}};
}

nlohmann::json fake_report(const std::string& model, const std::string& hash, double phys) {
  return {{"format", "wakereport1"},
          {"model", model},
          {"test_set_hash", hash},
          {"dimensions", {{{"dim", 0}, {"r2", 0.9}, {"rmse", 0.1}}}},
          {"physical",
           {{"mean_normalized_mse", phys},
            {"mean_decoded_exact_floor", 0.01},
            {"outlier_fraction", 0.05}}}};
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("configuration validation") {
  const fs::path out = fs::temp_directory_path() / "wake_pl_invalid";
  fs::remove_all(out);
  nlohmann::json j = minimal_config(out);
  j["dataset"]["n_test"] = 0;
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  CHECK_FALSE(fs::exists(out));

  j = minimal_config(out);
  j["gp"].erase("seed");
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);

  j = minimal_config(out);
  j["svgp"]["inducing"] = 500;
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);

  const ExperimentConfig c = experiment_config_from_json(minimal_config(out));
  CHECK(c.n_train == 200);
  CHECK(c.ae.epochs == 20);
  const ExperimentConfig back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_NOTHROW(desk_scale_config().validate());
}

TEST_CASE("report comparison") {
  const fs::path dir = fs::temp_directory_path() / "wake_pl_compare";
  fs::remove_all(dir);
  write_json_file(dir / "a.json", fake_report("a", "h1", 0.2));
  write_json_file(dir / "b.json", fake_report("b", "h1", 0.2));
  write_json_file(dir / "c.json", fake_report("c", "h1", 0.5));
  write_json_file(dir / "d.json", fake_report("d", "h2", 0.2));

  const auto same = compare_reports({dir / "a.json", dir / "b.json"});
  for (const auto& row : same.at("models")) {
    CHECK(row.at("delta_mean_normalized_mse").get<double>() == 0.0);
    CHECK(row.at("delta_r2_z0").get<double>() == 0.0);
    CHECK(row.at("delta_rmse_z0").get<double>() == 0.0);
    CHECK(row.at("ratio_to_best").get<double>() == 1.0);
  }
  const auto diff = compare_reports({dir / "a.json", dir / "c.json"});
  CHECK(diff.at("models")[1].at("delta_mean_normalized_mse").get<double>() == doctest::Approx(0.3));
  CHECK(diff.at("models")[1].at("ratio_to_best").get<double>() == doctest::Approx(2.5));
  CHECK_THROWS_AS(compare_reports({dir / "a.json", dir / "d.json"}), TestSetMismatch);

  write_comparison(dir / "out", diff);
  CHECK(fs::exists(dir / "out" / "comparison.csv"));
  std::ifstream is(dir / "out" / "comparison.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("model,", 0) == 0);
}

TEST_CASE("a failing stage leaves an error record") {
  const fs::path out = fs::temp_directory_path() / "wake_pl_fail";
  fs::remove_all(out);
  fs::create_directories(out);
  std::ofstream(out / "data") << "not a directory";
  const ExperimentConfig c = experiment_config_from_json(minimal_config(out));
  const PipelineResult r = run_pipeline(c);
  CHECK(r.exit_code == 2);
  CHECK(r.failed_stage == "generate");
  CHECK(fs::exists(out / "FAILED"));
  const auto err = read_json_file(out / "error.json");
  CHECK(err.at("stage") == "generate");
  CHECK(err.contains("kind"));
  CHECK(err.contains("message"));
}

TEST_CASE("minimal end-to-end run is reproducible") {
  const fs::path out = fs::temp_directory_path() / "wake_pl_min";
  fs::remove_all(out);
  const ExperimentConfig c = experiment_config_from_json(minimal_config(out));

  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult first = run_pipeline(c);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(first.exit_code == 0);
  CHECK(seconds < 600.0);
  MESSAGE("minimal pipeline: " << seconds << " s");

  for (const char* f : {"config.json", "manifest.json", "comparison.csv", "comparison.json",
                        "ae/model.ae", "latents/train.csv", "latents/test.csv", "models/mlp.json",
                        "models/gp_z0.json", "models/svgp_z3.json", "models/algp_z1.json",
                        "al/trace_z0.csv", "al/summary.json", "reports/mlp/report.json",
                        "reports/gp/kde.csv", "reports/svgp/sorted_errors.csv",
                        "reports/algp/physical_errors.csv"})
    CHECK_MESSAGE(fs::exists(out / f), f);

  // stage outputs are self-contained files
  const GpRegressor gp = load_gp(out / "models" / "gp_z0.json");
  CHECK(gp.gp.size() == 200);
  CHECK(load_ae(out / "ae" / "model.ae").arch.latent_dim == 4);

  const PipelineResult again = run_pipeline(c);
  CHECK(again.exit_code == 0);
  CHECK(again.skipped);

  const PipelineResult forced = run_pipeline(c, true);
  CHECK(forced.exit_code == 0);
  CHECK_FALSE(forced.skipped);
  CHECK(forced.manifest == first.manifest);
  CHECK(read_json_file(out / "manifest.json") == first.manifest);

  // tampering with an artifact defeats the idempotence check
  std::ofstream(out / "comparison.csv", std::ios::app) << "x\n";
  CHECK_FALSE(run_pipeline(c).skipped);
  CHECK(read_json_file(out / "manifest.json") == first.manifest);
}

}  // TEST_SUITE
