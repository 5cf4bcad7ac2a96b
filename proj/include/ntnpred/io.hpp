#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ntnpred {

/// Writes to a sibling temp file and renames it into place, so readers never
/// observe a partially written file. Creates missing parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trippable decimal form ("%.17g" trimmed), '.' decimal point.
std::string format_double(double v);

}  // namespace ntnpred
