#pragma once

#include <filesystem>
#include <string>

namespace mofit {

/// Writes `text` to a sibling temporary file, flushes it to disk and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace mofit
