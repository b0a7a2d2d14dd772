#pragma once

#include <map>
#include <string>
#include <vector>

namespace starmm {

/// Plain-text key-value configuration.
///
/// Format: one `key = value` per line, `#` starts a comment, blank lines are
/// ignored. Keys are case-sensitive. List values are whitespace- or
/// comma-separated.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "<empty>";
};

}  // namespace starmm
