// wakegen: standalone synthetic dataset generator.

#include <CLI11.hpp>
#include <iostream>

#include "wake/errors.hpp"
#include "wake/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic LiDAR wake-scan generator"};
  wake::GeneratorConfig config;
  std::filesystem::path out;
  app.add_option("--n", config.n, "Number of scans")->default_val(5000);
  app.add_option("--noise", config.noise_sd, "Measurement noise sd")->default_val(0.03);
  app.add_option("--dropout", config.dropout_rate, "Per-cell dropout rate")->default_val(0.1);
  app.add_option("--anomaly-rate", config.anomaly_rate, "Fraction of scans with a speed-up feature")
      ->default_val(0.0);
  app.add_option("--seed", config.seed, "Seed")->required();
  app.add_option("--out", out, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    wake::generate_to_dir(config, out);
  } catch (const wake::Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << config.n << " scans to " << out << '\n';
  return 0;
}
