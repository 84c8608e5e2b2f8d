#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wake {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(std::string_view text);

/// Little-endian IEEE-754 encoding of a double array, base64 wrapped.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view text);

}  // namespace wake
