#include "rfim/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rfim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return i;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& origin) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (c.values_.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, path);
}

void Config::merge_defaults(const Config& defaults) {
  for (const auto& [k, v] : defaults.values_) values_.emplace(k, v);
}

const std::string* Config::find(const std::string& key) const {
  used_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  if (const auto* v = find(key)) return *v;
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

double Config::get_double(const std::string& key, std::optional<double> fallback) const {
  if (const auto* v = find(key)) return to_double(key, *v);
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

long long Config::get_int(const std::string& key, std::optional<long long> fallback) const {
  if (const auto* v = find(key)) return to_int(key, *v);
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

std::uint64_t Config::get_uint(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (const auto* v = find(key)) {
    std::size_t pos = 0;
    std::uint64_t u = 0;
    try {
      u = std::stoull(*v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v->size() || v->empty() || (*v)[0] == '-')
      throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + *v + "'");
    return u;
  }
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

bool Config::get_bool(const std::string& key, std::optional<bool> fallback) const {
  if (const auto* v = find(key)) {
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
  }
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::optional<std::vector<double>>& fallback) const {
  if (const auto* v = find(key)) {
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

std::vector<int> Config::get_ints(const std::string& key, const std::optional<std::vector<int>>& fallback) const {
  if (const auto* v = find(key)) {
    std::vector<int> out;
    for (const auto& item : split_list(*v)) out.push_back(static_cast<int>(to_int(key, item)));
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError("missing required key '" + key + "'");
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rfim
