#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. Lines starting with '#' are comments;
/// lists are comma separated. Keys are case sensitive.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Fills keys that are not present yet.
  void merge_defaults(const Config& defaults);

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  long long get_int(const std::string& key, std::optional<long long> fallback = std::nullopt) const;
  std::uint64_t get_uint(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  std::vector<double> get_doubles(const std::string& key, const std::optional<std::vector<double>>& fallback = std::nullopt) const;
  std::vector<int> get_ints(const std::string& key, const std::optional<std::vector<int>>& fallback = std::nullopt) const;

  /// Keys present in the file that no getter has asked for.
  std::vector<std::string> unused_keys() const;

  /// Canonical text: sorted `key = value` lines.
  std::string serialize() const;
  /// FNV-1a of serialize(), as 16 hex digits.
  std::string hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace rfim
