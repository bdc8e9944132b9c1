#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qocsim/errors.hpp"

namespace qocsim {

/// Flat `key = value` file with `#` comments and dotted keys.
///
/// Typed getters mark keys as consumed; after loading, a caller that knows
/// the full schema calls reject_unknown_keys() so that a typo in a key
/// fails loudly with its line number instead of being silently ignored.
class KvFile {
 public:
  static KvFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  static KvFile parse_string(const std::string& text, const std::string& origin) {
    KvFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value', got '" + trimmed + "'");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      }
      if (kv.entries_.count(key)) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                          key + "'");
      }
      kv.entries_[key] = Entry{value, lineno};
    }
    return kv;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second.value;
  }

  std::string require_string(const std::string& key) const {
    auto v = get_string(key);
    if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return *v;
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = get_string(key);
    return v ? parse_double(key, *v) : fallback;
  }

  double require_double(const std::string& key) const {
    return parse_double(key, require_string(key));
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get_string(key);
    return v ? parse_int(key, *v) : fallback;
  }

  std::int64_t require_int(const std::string& key) const {
    return parse_int(key, require_string(key));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = get_string(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError(location(key) + ": expected true/false for '" + key + "', got '" +
                      *v + "'");
  }

  /// Every key still unconsumed is unknown to the schema; name the first one.
  void reject_unknown_keys() const {
    for (const auto& [key, entry] : entries_) {
      if (!consumed_.count(key)) {
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                          ": unknown key '" + key + "'");
      }
    }
  }

  const std::string& origin() const { return origin_; }

  std::string location(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return origin_;
    return origin_ + ":" + std::to_string(it->second.line);
  }

 private:
  struct Entry {
    std::string value;
    int line{0};
  };

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  double parse_double(const std::string& key, const std::string& text) const {
    std::size_t pos = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != text.size()) {
      throw ConfigError(location(key) + ": expected a number for '" + key + "', got '" +
                        text + "'");
    }
    return value;
  }

  std::int64_t parse_int(const std::string& key, const std::string& text) const {
    std::size_t pos = 0;
    long long value = 0;
    try {
      value = std::stoll(text, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != text.size()) {
      throw ConfigError(location(key) + ": expected an integer for '" + key + "', got '" +
                        text + "'");
    }
    return value;
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace qocsim
