#include "wake/model_io.hpp"

#include <fstream>
#include <sstream>

#include "wake/csv.hpp"
#include "wake/errors.hpp"
#include "wake/hash.hpp"

namespace wake {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string encode(const Eigen::MatrixXd& m) {
  return encode_doubles(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Eigen::MatrixXd decode_matrix(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const std::vector<double> v = decode_doubles(j.get<std::string>());
  if (v.size() != static_cast<std::size_t>(rows * cols))
    throw FormatError("stored matrix has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(rows * cols));
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_format(const json& j, const char* expected, const fs::path& path) {
  if (!j.contains("format") || j["format"] != expected)
    throw FormatError(path.string() + ": not a " + std::string(expected) + " file");
}

json scalers_json(const InputScaler& in, const TargetScaler& t) {
  return {{"input_mean", vec_json(in.mean.transpose())},
          {"input_sd", vec_json(in.sd.transpose())},
          {"target_mean", t.mean},
          {"target_sd", t.sd}};
}

void scalers_from(const json& j, InputScaler& in, TargetScaler& t) {
  in.mean = vec_from(j.at("input_mean")).transpose();
  in.sd = vec_from(j.at("input_sd")).transpose();
  t.mean = j.at("target_mean").get<double>();
  t.sd = j.at("target_sd").get<double>();
}

std::string relative_to(const fs::path& target, const fs::path& base_dir) {
  return fs::relative(fs::absolute(target), fs::absolute(base_dir)).generic_string();
}

json data_ref_json(const DataRef& ref, const fs::path& model_path) {
  const fs::path dir = model_path.parent_path().empty() ? fs::path(".") : model_path.parent_path();
  return {{"params_csv", relative_to(ref.params_csv, dir)},
          {"latents_csv", relative_to(ref.latents_csv, dir)},
          {"params_sha256", sha256_file(ref.params_csv)},
          {"latents_sha256", sha256_file(ref.latents_csv)},
          {"dim", ref.dim},
          {"rows", ref.rows}};
}

DataRef data_ref_from(const json& j, const fs::path& model_path) {
  const fs::path dir = model_path.parent_path();
  DataRef ref;
  ref.params_csv = dir / j.at("params_csv").get<std::string>();
  ref.latents_csv = dir / j.at("latents_csv").get<std::string>();
  ref.dim = j.at("dim").get<std::size_t>();
  ref.rows = j.at("rows").get<std::vector<std::size_t>>();
  if (sha256_file(ref.params_csv) != j.at("params_sha256").get<std::string>() ||
      sha256_file(ref.latents_csv) != j.at("latents_sha256").get<std::string>())
    throw FormatError(model_path.string() + ": referenced training data changed since fitting");
  return ref;
}

json hyper_json(const GpHyper& h) {
  return {{"lengthscale", h.lengthscale}, {"noise_variance", h.noise_variance}};
}

GpHyper hyper_from(const json& j) {
  return {j.at("lengthscale").get<double>(), j.at("noise_variance").get<double>()};
}

}  // namespace

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

json to_json(const AeArchitecture& a) {
  return {{"grid_rows", a.grid_rows},
          {"grid_cols", a.grid_cols},
          {"padded_rows", a.padded_rows},
          {"padded_cols", a.padded_cols},
          {"encoder_channels", a.encoder_channels},
          {"decoder_channels", a.decoder_channels},
          {"latent_dim", a.latent_dim}};
}

AeArchitecture ae_architecture_from_json(const json& j) {
  AeArchitecture a;
  a.grid_rows = j.at("grid_rows").get<std::size_t>();
  a.grid_cols = j.at("grid_cols").get<std::size_t>();
  a.padded_rows = j.at("padded_rows").get<std::size_t>();
  a.padded_cols = j.at("padded_cols").get<std::size_t>();
  a.encoder_channels = j.at("encoder_channels").get<std::vector<std::size_t>>();
  a.decoder_channels = j.at("decoder_channels").get<std::vector<std::size_t>>();
  a.latent_dim = j.at("latent_dim").get<std::size_t>();
  a.validate();
  return a;
}

void save_ae(const fs::path& path, const AeParams& p, const json& echo) {
  json j;
  j["format"] = "wake-ae1";
  j["architecture"] = to_json(p.arch);
  j["parameter_count"] = p.weights.size();
  j["weights"] = encode_doubles(p.weights);
  j["normalization"] = {{"cell_mean", encode_doubles(p.norm.cell_mean)}, {"scale", p.norm.scale}};
  j["seed"] = p.seed;
  j["config"] = echo;
  write_json_file(path, j);
}

AeParams load_ae(const fs::path& path) {
  const json j = read_json_file(path);
  check_format(j, "wake-ae1", path);
  try {
    AeParams p;
    p.arch = ae_architecture_from_json(j.at("architecture"));
    p.weights = decode_doubles(j.at("weights").get<std::string>());
    const auto stored = j.at("parameter_count").get<std::size_t>();
    if (stored != p.arch.parameter_count() || p.weights.size() != stored)
      throw FormatError(path.string() + ": parameter count " + std::to_string(p.weights.size()) +
                        " does not match the architecture (" +
                        std::to_string(p.arch.parameter_count()) + ")");
    p.norm.cell_mean = decode_doubles(j.at("normalization").at("cell_mean").get<std::string>());
    p.norm.scale = j.at("normalization").at("scale").get<double>();
    if (!p.norm.cell_mean.empty() && p.norm.cell_mean.size() != p.arch.input_size())
      throw FormatError(path.string() + ": normalization does not match the grid");
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ShapeMismatch& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_mlp(const fs::path& path, const MlpModel& m, const json& echo) {
  json j;
  j["format"] = "wake-mlp1";
  j["widths"] = m.net.widths;
  j["parameter_count"] = m.net.parameter_count();
  j["weights"] = encode_doubles(m.net.flatten());
  j["input_lo"] = vec_json(m.input_lo);
  j["input_hi"] = vec_json(m.input_hi);
  j["target_mean"] = vec_json(m.target_mean);
  j["target_sd"] = vec_json(m.target_sd);
  j["seed"] = m.seed;
  j["config"] = echo;
  write_json_file(path, j);
}

MlpModel load_mlp(const fs::path& path) {
  const json j = read_json_file(path);
  check_format(j, "wake-mlp1", path);
  try {
    MlpModel m;
    m.net = MlpParams::zeros(j.at("widths").get<std::vector<std::size_t>>());
    const std::vector<double> flat = decode_doubles(j.at("weights").get<std::string>());
    if (flat.size() != m.net.parameter_count() ||
        j.at("parameter_count").get<std::size_t>() != m.net.parameter_count())
      throw FormatError(path.string() + ": parameter count does not match the layer widths");
    m.net.assign(flat);
    m.input_lo = vec_from(j.at("input_lo"));
    m.input_hi = vec_from(j.at("input_hi"));
    m.target_mean = vec_from(j.at("target_mean"));
    m.target_sd = vec_from(j.at("target_sd"));
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void load_training_data(const DataRef& ref, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  const Eigen::MatrixXd params = read_params_csv(ref.params_csv);
  const Eigen::MatrixXd latents = read_latents_csv(ref.latents_csv);
  if (params.rows() != latents.rows())
    throw ShapeMismatch("parameter and latent tables differ in row count");
  if (ref.dim >= static_cast<std::size_t>(latents.cols()))
    throw ShapeMismatch("latent dimension " + std::to_string(ref.dim) + " out of range");
  if (ref.rows.empty()) {
    x = params;
    y = latents.col(static_cast<Eigen::Index>(ref.dim));
    return;
  }
  x.resize(static_cast<Eigen::Index>(ref.rows.size()), params.cols());
  y.resize(static_cast<Eigen::Index>(ref.rows.size()));
  for (std::size_t i = 0; i < ref.rows.size(); ++i) {
    if (ref.rows[i] >= static_cast<std::size_t>(params.rows()))
      throw ShapeMismatch("training row index out of range");
    const auto r = static_cast<Eigen::Index>(ref.rows[i]);
    x.row(static_cast<Eigen::Index>(i)) = params.row(r);
    y(static_cast<Eigen::Index>(i)) = latents(r, static_cast<Eigen::Index>(ref.dim));
  }
}

void save_gp(const fs::path& path, const GpRegressor& r, const DataRef& ref, const json& echo) {
  json j;
  j["format"] = "wake-gp1";
  j["kernel"] = "matern32";
  j["hyperparameters"] = hyper_json(r.gp.hyper());
  j["scalers"] = scalers_json(r.input, r.target);
  j["training_data"] = data_ref_json(ref, path);
  j["refactorize_on_load"] = true;
  j["loglik"] = r.gp.loglik();
  j["config"] = echo;
  write_json_file(path, j);
}

GpRegressor load_gp(const fs::path& path) {
  const json j = read_json_file(path);
  check_format(j, "wake-gp1", path);
  try {
    InputScaler in;
    TargetScaler t;
    scalers_from(j.at("scalers"), in, t);
    const DataRef ref = data_ref_from(j.at("training_data"), path);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    load_training_data(ref, x, y);
    return assemble_gp_regressor(x, y, in, t, hyper_from(j.at("hyperparameters")));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_svgp(const fs::path& path, const SvgpRegressor& r, const DataRef& ref, const json& echo) {
  json j;
  j["format"] = "wake-svgp1";
  j["kernel"] = "matern32";
  j["hyperparameters"] = hyper_json(r.gp.hyper());
  j["scalers"] = scalers_json(r.input, r.target);
  j["inducing_rows"] = r.gp.inducing().rows();
  j["inducing_cols"] = r.gp.inducing().cols();
  j["inducing"] = encode(r.gp.inducing());
  j["training_data"] = data_ref_json(ref, path);
  j["refactorize_on_load"] = true;
  j["elbo"] = r.gp.elbo();
  j["config"] = echo;
  write_json_file(path, j);
}

SvgpRegressor load_svgp(const fs::path& path) {
  const json j = read_json_file(path);
  check_format(j, "wake-svgp1", path);
  try {
    InputScaler in;
    TargetScaler t;
    scalers_from(j.at("scalers"), in, t);
    const DataRef ref = data_ref_from(j.at("training_data"), path);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    load_training_data(ref, x, y);
    const Eigen::MatrixXd z = decode_matrix(j.at("inducing"), j.at("inducing_rows").get<Eigen::Index>(),
                                            j.at("inducing_cols").get<Eigen::Index>());
    return assemble_svgp_regressor(x, y, in, t, hyper_from(j.at("hyperparameters")), z);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace wake
