#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "wake/wakegen.hpp"

namespace wake {

/// Numeric CSV table with a single header line.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd data;  // rows x header.size()

  /// Column index by name; throws FormatError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data);

/// `index,scada_ws,...,scada_pitch`
void write_params_csv(const std::filesystem::path& path, const std::vector<ParamVector>& params);
/// n x 7 raw parameter matrix (first column `index` dropped).
Eigen::MatrixXd read_params_csv(const std::filesystem::path& path);
Eigen::MatrixXd params_matrix(const std::vector<ParamVector>& params);

/// `index,z0,...,z{k-1}`
void write_latents_csv(const std::filesystem::path& path, const Eigen::MatrixXd& latents);
Eigen::MatrixXd read_latents_csv(const std::filesystem::path& path);

}  // namespace wake
