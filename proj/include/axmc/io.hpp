#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace axmc {

/// Writes to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws Error(io) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Appends one line (a newline is added) and flushes.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace axmc
