#pragma once

// On-disk formats for scans and datasets.
//
//   WAKESCAN1 <rows> <cols>
//   <rows lines of cols comma-separated values>
//   <rows lines of cols comma-separated 0/1 mask flags>
//
// Values are written in shortest round-trip form, so read(write(s)) == s
// bit for bit. Coordinates are not stored; reading a scan of the default
// shape restores the default grid coordinates.

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

#include "wake/wakegen.hpp"

namespace wake {

void write_scan(std::ostream& os, const ScanGrid& s);
ScanGrid read_scan(std::istream& is);
void write_scan_file(const std::filesystem::path& path, const ScanGrid& s);
ScanGrid read_scan_file(const std::filesystem::path& path);

nlohmann::json to_json(const ParamVector& p);
ParamVector param_vector_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

/// Writes <dir>/manifest.json and <dir>/scans/scan_NNNNN.wks.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

/// Formats a double in shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace wake
