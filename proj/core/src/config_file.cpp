#include "pcar/config_file.hpp"

#include <stdexcept>

#include "pcar/text_io.hpp"

namespace pcar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

ConfigMap parse_config(const std::string& text, const std::string& source_name) {
  ConfigMap cfg;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error(source_name + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw std::runtime_error(source_name + ":" + std::to_string(line_no) +
                               ": empty key");
    }
    cfg[key] = value;
  }
  return cfg;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  return parse_config(read_text_file(path), path.string());
}

void check_known_keys(const ConfigMap& cfg, const std::set<std::string>& allowed,
                      const std::string& source_name) {
  std::string unknown;
  for (const auto& [key, value] : cfg) {
    if (!allowed.contains(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw std::runtime_error(source_name + ": unknown config keys: " + unknown);
  }
}

std::string get_str(const ConfigMap& cfg, const std::string& key,
                    const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

double get_double(const ConfigMap& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return parse_double(it->second, "config key '" + key + "'");
}

std::int64_t get_int(const ConfigMap& cfg, const std::string& key,
                     std::int64_t fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return parse_int(it->second, "config key '" + key + "'");
}

bool get_bool(const ConfigMap& cfg, const std::string& key, bool fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key '" + key + "': expected a boolean, got '" +
                           v + "'");
}

}  // namespace pcar
