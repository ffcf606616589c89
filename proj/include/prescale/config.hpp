#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/resources.hpp"

namespace prescale {

// Line-oriented `key = value` configuration. '#' starts a comment, blank
// lines are skipped, duplicate keys are rejected, and unknown keys are
// rejected against the schema the caller supplies.
class ConfigMap {
public:
  ConfigMap() = default;

  static ConfigMap from_stream(std::istream& in, const std::string& source = "<config>") {
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError(source, lineno, "expected 'key = value', got '" + t + "'");
      const std::string key = detail::trim(t.substr(0, eq));
      const std::string value = detail::trim(t.substr(eq + 1));
      if (key.empty()) throw ParseError(source, lineno, "empty key");
      if (cfg.values_.count(key)) throw ParseError(source, lineno, "duplicate key: " + key);
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigMap from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    return from_stream(in, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer: '" + it->second + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not a number: '" + it->second + "'");
    }
  }

  std::vector<long long> get_int_list(const std::string& key,
                                      const std::vector<long long>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<long long> out;
    for (const auto& tok : detail::split_csv(it->second)) {
      const std::string t = detail::trim(tok);
      try {
        std::size_t used = 0;
        out.push_back(std::stoll(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has a non-integer entry: '" + t + "'");
      }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
    return out;
  }

  // Rejects keys outside the documented schema.
  void require_known(const std::set<std::string>& allowed) const {
    std::string unknown;
    for (const auto& [key, value] : values_)
      if (!allowed.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace prescale
