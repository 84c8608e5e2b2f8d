#include "wake/csv.hpp"

#include <fstream>
#include <sstream>

#include "wake/errors.hpp"
#include "wake/scan_io.hpp"

namespace wake {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty CSV: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw FormatError(path.string() + ": row " + std::to_string(rows.size() + 1) +
                        " has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(t.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_double(cells[j]);
    rows.push_back(std::move(row));
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data) {
  if (static_cast<std::size_t>(data.cols()) != header.size()) {
    throw ShapeMismatch("CSV header/data width mismatch");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) line += ',';
      line += format_double(data(i, j));
    }
    os << line << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd params_matrix(const std::vector<ParamVector>& params) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(params.size()), static_cast<Eigen::Index>(kParamDim));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto v = params[i].as_array();
    for (std::size_t d = 0; d < kParamDim; ++d) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[d];
    }
  }
  return m;
}

void write_params_csv(const fs::path& path, const std::vector<ParamVector>& params) {
  std::vector<std::string> header{"index"};
  for (const char* n : ParamVector::names()) header.emplace_back(n);
  Eigen::MatrixXd data(static_cast<Eigen::Index>(params.size()), static_cast<Eigen::Index>(kParamDim + 1));
  data.col(0) = Eigen::VectorXd::LinSpaced(data.rows(), 0.0, static_cast<double>(data.rows() - 1));
  data.rightCols(kParamDim) = params_matrix(params);
  write_csv(path, header, data);
}

Eigen::MatrixXd read_params_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  Eigen::MatrixXd m(t.data.rows(), static_cast<Eigen::Index>(kParamDim));
  for (std::size_t d = 0; d < kParamDim; ++d) {
    m.col(static_cast<Eigen::Index>(d)) =
        t.data.col(static_cast<Eigen::Index>(t.column(ParamVector::names()[d])));
  }
  return m;
}

void write_latents_csv(const fs::path& path, const Eigen::MatrixXd& latents) {
  std::vector<std::string> header{"index"};
  for (Eigen::Index k = 0; k < latents.cols(); ++k) header.push_back("z" + std::to_string(k));
  Eigen::MatrixXd data(latents.rows(), latents.cols() + 1);
  data.col(0) = Eigen::VectorXd::LinSpaced(data.rows(), 0.0, static_cast<double>(data.rows() - 1));
  data.rightCols(latents.cols()) = latents;
  write_csv(path, header, data);
}

Eigen::MatrixXd read_latents_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j].size() > 1 && t.header[j][0] == 'z') cols.push_back(static_cast<Eigen::Index>(j));
  }
  if (cols.empty()) throw FormatError(path.string() + " has no latent columns");
  Eigen::MatrixXd m(t.data.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = t.data.col(cols[k]);
  return m;
}

}  // namespace wake
