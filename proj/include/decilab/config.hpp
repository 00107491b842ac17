#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace decilab {

/// Malformed or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static ConfigFile parse(std::istream& in, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::string section;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) cfg.fail(lineno, "malformed section header '" + line + "'");
        section = strip(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) cfg.fail(lineno, "expected 'key = value', got '" + line + "'");
      if (section.empty()) cfg.fail(lineno, "key outside of any [section]");
      const std::string key = strip(line.substr(0, eq));
      const std::string value = strip(line.substr(eq + 1));
      if (key.empty()) cfg.fail(lineno, "empty key");
      const std::string full = section + "." + key;
      if (cfg.entries_.count(full)) cfg.fail(lineno, "duplicate key '" + full + "'");
      cfg.entries_[full] = {value, lineno};
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse(in, path);
  }

  const std::string& origin() const { return origin_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::size_t line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    if (line == 0) throw ConfigError(origin_ + ": " + msg);
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { fail(line_of(key), key + ": " + msg); }

  /// Rejects keys outside the allowed set.
  void require_known(const std::vector<std::string>& allowed) const {
    for (const auto& [key, entry] : entries_) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == key;
      if (!ok) fail(entry.line, "unknown key '" + key + "'");
    }
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  std::optional<std::string> find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  long get_long(const std::string& key, long fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    return to_long(key, *v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    std::size_t used = 0;
    try {
      if (!v->empty() && v->front() == '-') throw std::invalid_argument("negative");
      const unsigned long long x = std::stoull(*v, &used, 10);
      if (used != v->size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail(key, "expected a non-negative integer, got '" + *v + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    return to_double(key, *v);
  }

  std::vector<long> get_long_list(const std::string& key) const {
    std::vector<long> out;
    if (const auto v = find(key)) {
      for (const auto& tok : split(*v)) out.push_back(to_long(key, tok));
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    if (const auto v = find(key)) {
      for (const auto& tok : split(*v)) out.push_back(to_double(key, tok));
    }
    return out;
  }

  std::vector<std::string> get_list(const std::string& key) const {
    const auto v = find(key);
    return v ? split(*v) : std::vector<std::string>{};
  }

  /// Canonical text of the resolved entries, one `key=value` per line in key order.
  std::string canonical() const {
    std::string s;
    for (const auto& [key, entry] : entries_) s += key + "=" + entry.value + "\n";
    return s;
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string tok;
    for (char c : s) {
      if (c == ',' || c == ' ' || c == '\t') {
        if (!tok.empty()) out.push_back(tok);
        tok.clear();
      } else {
        tok.push_back(c);
      }
    }
    if (!tok.empty()) out.push_back(tok);
    return out;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  long to_long(const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    try {
      const long x = std::stol(v, &used, 10);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + v + "'");
    }
  }

  /// Decimal, or a multiple of pi written as `pi`, `pi/4`, `0.5*pi`.
  double to_double(const std::string& key, const std::string& v) const {
    constexpr double kPiValue = 3.14159265358979323846;
    try {
      std::size_t used = 0;
      if (v == "pi") return kPiValue;
      if (v.rfind("pi/", 0) == 0) {
        const std::string d = v.substr(3);
        const double den = std::stod(d, &used);
        if (used != d.size() || den == 0.0) throw std::invalid_argument("bad");
        return kPiValue / den;
      }
      if (v.size() > 3 && v.compare(v.size() - 3, 3, "*pi") == 0) {
        const std::string m = v.substr(0, v.size() - 3);
        const double mul = std::stod(m, &used);
        if (used != m.size()) throw std::invalid_argument("bad");
        return mul * kPiValue;
      }
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'");
    }
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace decilab
