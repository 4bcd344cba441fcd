#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace icd {

/// Flat key=value configuration with dotted keys (e.g. `inner.solvers=cg,pcg`).
/// Lines starting with '#' are comments; lists are comma separated.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  /// Applies "key=value"; throws ConfigError when malformed.
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<long long> get_int_list(const std::string& key) const;

  /// Throws ConfigError naming the first key outside `allowed` (prefix "x.*" admits a section).
  void check_known(const std::vector<std::string>& allowed) const;

  /// Every entry as "# key=value" lines, sorted by key.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace icd
