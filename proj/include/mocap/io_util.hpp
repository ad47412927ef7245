#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mocap {

/// 64-bit FNV-1a digest as 16 lowercase hex digits. Used as a dataset
/// fingerprint, not for security.
std::string fingerprint(std::string_view bytes);

/// Whole file as bytes; throws ErrorKind::io when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, replacing any existing file; throws ErrorKind::io.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// `value` with 17 significant digits ("%.17g"); round-trips exactly.
std::string format_double(double value);

}  // namespace mocap
