#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace pcar {

// Flat "key = value" experiment config. '#' starts a comment, blank lines
// are ignored, duplicate keys keep the last value.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text, const std::string& source_name);
ConfigMap read_config_file(const std::filesystem::path& path);

// Throws naming every key outside `allowed` (typo guard).
void check_known_keys(const ConfigMap& cfg, const std::set<std::string>& allowed,
                      const std::string& source_name);

std::string get_str(const ConfigMap& cfg, const std::string& key,
                    const std::string& fallback);
double get_double(const ConfigMap& cfg, const std::string& key, double fallback);
std::int64_t get_int(const ConfigMap& cfg, const std::string& key,
                     std::int64_t fallback);
bool get_bool(const ConfigMap& cfg, const std::string& key, bool fallback);

}  // namespace pcar
