#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace helu {

/// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double ("nan"/"inf" for non-finite).
std::string fmt_double(double v);

}  // namespace helu
