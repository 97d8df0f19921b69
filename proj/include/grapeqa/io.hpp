#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace grapeqa {

/// Throws DataError when the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace grapeqa
