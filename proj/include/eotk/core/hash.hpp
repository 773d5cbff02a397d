#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace eotk {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const char> bytes);

/// Digest of a file's contents; throws IoError.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace eotk
