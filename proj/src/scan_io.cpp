#include "wake/scan_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wake/errors.hpp"

namespace wake {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) {
    text.remove_suffix(1);
  }
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_scan(std::ostream& os, const ScanGrid& s) {
  os << "WAKESCAN1 " << s.rows << ' ' << s.cols << '\n';
  std::string line;
  for (std::size_t i = 0; i < s.rows; ++i) {
    line.clear();
    for (std::size_t j = 0; j < s.cols; ++j) {
      if (j) line += ',';
      line += format_double(s.at(i, j));
    }
    os << line << '\n';
  }
  for (std::size_t i = 0; i < s.rows; ++i) {
    line.clear();
    for (std::size_t j = 0; j < s.cols; ++j) {
      if (j) line += ',';
      line += s.valid(i, j) ? '1' : '0';
    }
    os << line << '\n';
  }
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

ScanGrid read_scan(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("empty scan stream");
  std::istringstream hs(header);
  std::string magic;
  std::size_t rows = 0, cols = 0;
  if (!(hs >> magic >> rows >> cols) || magic != "WAKESCAN1" || rows == 0 || cols == 0) {
    throw FormatError("bad WAKESCAN1 header: '" + header + "'");
  }
  ScanGrid s = (rows == kGridRows && cols == kGridCols) ? ScanGrid::default_grid()
                                                       : ScanGrid::with_shape(rows, cols);
  std::string line;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw FormatError("truncated value block");
    const auto cells = split_commas(line);
    if (cells.size() != cols) throw FormatError("value row " + std::to_string(i) + " has wrong width");
    for (std::size_t j = 0; j < cols; ++j) s.at(i, j) = parse_double(cells[j]);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw FormatError("truncated mask block");
    const auto cells = split_commas(line);
    if (cells.size() != cols) throw FormatError("mask row " + std::to_string(i) + " has wrong width");
    for (std::size_t j = 0; j < cols; ++j) {
      if (cells[j] == "1") {
        s.mask[i * cols + j] = 1;
      } else if (cells[j] == "0") {
        s.mask[i * cols + j] = 0;
      } else {
        throw FormatError("mask flag must be 0 or 1");
      }
    }
  }
  return s;
}

void write_scan_file(const fs::path& path, const ScanGrid& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_scan(os, s);
  if (!os) throw IoError("write failed: " + path.string());
}

ScanGrid read_scan_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_scan(is);
}

json to_json(const ParamVector& p) {
  json j = json::object();
  const auto v = p.as_array();
  for (std::size_t i = 0; i < kParamDim; ++i) j[ParamVector::names()[i]] = v[i];
  return j;
}

ParamVector param_vector_from_json(const json& j) {
  std::array<double, kParamDim> v{};
  for (std::size_t i = 0; i < kParamDim; ++i) v[i] = j.at(ParamVector::names()[i]).get<double>();
  return ParamVector::from_array(v);
}

json to_json(const GeneratorConfig& c) {
  const auto& w = c.wake;
  const auto& s = c.scada;
  const auto& b = c.blackout;
  return json{
      {"n", c.n},
      {"noise_sd", c.noise_sd},
      {"dropout_rate", c.dropout_rate},
      {"seed", c.seed},
      {"anomaly_rate", c.anomaly_rate},
      {"wake",
       {{"rho_ref", w.rho_ref}, {"rotor_diameter", w.rotor_diameter},
        {"efficiency", w.efficiency}, {"thrust_gain", w.thrust_gain},
        {"ct_min", w.ct_min}, {"ct_max", w.ct_max},
        {"expansion_gain", w.expansion_gain}, {"stability_gain", w.stability_gain},
        {"initial_width", w.initial_width}, {"velocity_floor", w.velocity_floor},
        {"velocity_ceiling", w.velocity_ceiling}}},
      {"scada",
       {{"rated_power", s.rated_power}, {"cut_in_speed", s.cut_in_speed},
        {"rated_speed", s.rated_speed}, {"power_jitter", s.power_jitter},
        {"met_jitter", s.met_jitter}, {"rpm_ramp_end", s.rpm_ramp_end},
        {"rpm_jitter", s.rpm_jitter}, {"pitch_slope", s.pitch_slope},
        {"pitch_jitter", s.pitch_jitter}}},
      {"blackout",
       {{"lidar_x", b.lidar_x}, {"lidar_r", b.lidar_r},
        {"min_width_deg", b.min_width_deg}, {"max_width_deg", b.max_width_deg},
        {"min_range_depth", b.min_range_depth}, {"max_range_depth", b.max_range_depth}}},
  };
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  c.n = j.value("n", c.n);
  c.noise_sd = j.value("noise_sd", c.noise_sd);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.seed = j.value("seed", c.seed);
  c.anomaly_rate = j.value("anomaly_rate", c.anomaly_rate);
  if (j.contains("wake")) {
    const auto& w = j["wake"];
    auto& m = c.wake;
    m.rho_ref = w.value("rho_ref", m.rho_ref);
    m.rotor_diameter = w.value("rotor_diameter", m.rotor_diameter);
    m.efficiency = w.value("efficiency", m.efficiency);
    m.thrust_gain = w.value("thrust_gain", m.thrust_gain);
    m.ct_min = w.value("ct_min", m.ct_min);
    m.ct_max = w.value("ct_max", m.ct_max);
    m.expansion_gain = w.value("expansion_gain", m.expansion_gain);
    m.stability_gain = w.value("stability_gain", m.stability_gain);
    m.initial_width = w.value("initial_width", m.initial_width);
    m.velocity_floor = w.value("velocity_floor", m.velocity_floor);
    m.velocity_ceiling = w.value("velocity_ceiling", m.velocity_ceiling);
  }
  if (j.contains("scada")) {
    const auto& s = j["scada"];
    auto& m = c.scada;
    m.rated_power = s.value("rated_power", m.rated_power);
    m.cut_in_speed = s.value("cut_in_speed", m.cut_in_speed);
    m.rated_speed = s.value("rated_speed", m.rated_speed);
    m.power_jitter = s.value("power_jitter", m.power_jitter);
    m.met_jitter = s.value("met_jitter", m.met_jitter);
    m.rpm_ramp_end = s.value("rpm_ramp_end", m.rpm_ramp_end);
    m.rpm_jitter = s.value("rpm_jitter", m.rpm_jitter);
    m.pitch_slope = s.value("pitch_slope", m.pitch_slope);
    m.pitch_jitter = s.value("pitch_jitter", m.pitch_jitter);
  }
  if (j.contains("blackout")) {
    const auto& b = j["blackout"];
    auto& m = c.blackout;
    m.lidar_x = b.value("lidar_x", m.lidar_x);
    m.lidar_r = b.value("lidar_r", m.lidar_r);
    m.min_width_deg = b.value("min_width_deg", m.min_width_deg);
    m.max_width_deg = b.value("max_width_deg", m.max_width_deg);
    m.min_range_depth = b.value("min_range_depth", m.min_range_depth);
    m.max_range_depth = b.value("max_range_depth", m.max_range_depth);
  }
  return c;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  if (ds.params.size() != ds.scans.size()) {
    throw ShapeMismatch("dataset has mismatched params/scans counts");
  }
  fs::create_directories(dir / "scans");
  json records = json::array();
  for (std::size_t i = 0; i < ds.params.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scans/scan_%05zu.wks", i);
    write_scan_file(dir / name, ds.scans[i]);
    records.push_back({{"index", i}, {"params", to_json(ds.params[i])}, {"scan", name}});
  }
  json manifest = {
      {"format", "wakedata1"},
      {"seed", ds.seed},
      {"config", to_json(ds.config)},
      {"records", std::move(records)},
  };
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os) throw IoError("cannot write dataset manifest in " + dir.string());
  os << manifest.dump(1) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json", std::ios::binary);
  if (!is) throw IoError("no dataset manifest in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError("dataset manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "wakedata1") throw FormatError("unknown dataset format");
  Dataset ds;
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.config = generator_config_from_json(manifest.at("config"));
  for (const auto& rec : manifest.at("records")) {
    ds.params.push_back(param_vector_from_json(rec.at("params")));
    ds.scans.push_back(read_scan_file(dir / rec.at("scan").get<std::string>()));
  }
  return ds;
}

}  // namespace wake
