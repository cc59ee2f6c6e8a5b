#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace focanm {

/// Flat "dotted.key = value" file. '#' starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key = trim(body.substr(0, eq));
      if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = trim(body.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, std::string> values_;
};

inline double parse_double(const std::string& text, const std::string& what) {
  const std::string s = KeyValueConfig::trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument(what + ": not a number: '" + text + "'");
  return v;
}

inline long parse_long(const std::string& text, const std::string& what) {
  const std::string s = KeyValueConfig::trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument(what + ": not an integer: '" + text + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = KeyValueConfig::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// "a,b,c" or "start:step:stop" (inclusive of stop up to rounding).
inline std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  const std::string s = KeyValueConfig::trim(text);
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 + 1);
    const double start = parse_double(s.substr(0, c1), what);
    const double step = parse_double(s.substr(c1 + 1, c2 - c1 - 1), what);
    const double stop = parse_double(s.substr(c2 + 1), what);
    if (step == 0.0 || (stop - start) / step < 0.0) throw std::invalid_argument(what + ": empty range '" + text + "'");
    const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out;
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, what));
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

}  // namespace focanm
