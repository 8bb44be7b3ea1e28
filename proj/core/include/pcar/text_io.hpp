#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pcar {

// Shortest round-trip decimal form; infinities become "inf"/"-inf".
std::string format_double(double v);

// Parses a full string as a double ("inf" accepted). Throws on trailing
// garbage or empty input, naming `what` in the message.
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);

// Write-to-temp then rename, so readers never observe partial files.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace pcar
