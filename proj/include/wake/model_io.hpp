#pragma once

// JSON model files. Large parameter arrays are stored as base64 of
// little-endian doubles; GP files reference their training data by path
// (relative to the model file) and rebuild the factorization on load.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "wake/autoencoder.hpp"
#include "wake/gp.hpp"
#include "wake/mlp.hpp"
#include "wake/svgp.hpp"

namespace wake {

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes pretty-printed JSON followed by a newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

nlohmann::json to_json(const AeArchitecture& a);
AeArchitecture ae_architecture_from_json(const nlohmann::json& j);

/// `echo` is stored verbatim under "config".
void save_ae(const std::filesystem::path& path, const AeParams& p,
             const nlohmann::json& echo = nlohmann::json::object());
/// Throws FormatError when the stored parameter count disagrees with the
/// architecture.
AeParams load_ae(const std::filesystem::path& path);

void save_mlp(const std::filesystem::path& path, const MlpModel& m,
              const nlohmann::json& echo = nlohmann::json::object());
MlpModel load_mlp(const std::filesystem::path& path);

/// Training data of a GP: one latent column plus the matching parameter rows.
struct DataRef {
  std::filesystem::path params_csv;
  std::filesystem::path latents_csv;
  std::size_t dim = 0;
  std::vector<std::size_t> rows;  // empty means all rows
};

/// Reads the referenced rows: inputs n x 7 and the latent column.
void load_training_data(const DataRef& ref, Eigen::MatrixXd& x, Eigen::VectorXd& y);

void save_gp(const std::filesystem::path& path, const GpRegressor& r, const DataRef& ref,
             const nlohmann::json& echo = nlohmann::json::object());
GpRegressor load_gp(const std::filesystem::path& path);

void save_svgp(const std::filesystem::path& path, const SvgpRegressor& r, const DataRef& ref,
               const nlohmann::json& echo = nlohmann::json::object());
SvgpRegressor load_svgp(const std::filesystem::path& path);

}  // namespace wake
