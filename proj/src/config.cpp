#include "starmm/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "starmm/common.hpp"

namespace starmm {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: " + v);
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KeyValueConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: " + v);
  }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  std::string v = lower(get_string(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: " + v);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> KeyValueConfig::get_string_list(const std::string& key) const {
  std::string v = get_string(key);
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& tok : get_string_list(key)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' has a non-numeric element: " + tok);
    }
  }
  return out;
}

}  // namespace starmm
