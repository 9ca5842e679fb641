#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// File formats and config parsing. All decimals are printed with 17
// significant digits so CSV round-trips are bit-faithful.

namespace delaybandit {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value file; '#' starts a comment. Later keys override earlier
// ones; environment variables DELAYBANDIT_<KEY> override the file.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KeyValueConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": expected key=value");
      c.values_[strip(s.substr(0, eq))] = strip(s.substr(eq + 1));
    }
    c.apply_env_overrides();
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long get_int(const std::string& key) const {
    const std::string v = get(key);
    try {
      std::size_t pos = 0;
      long r = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not an integer: " + v);
    }
  }

  double get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
      std::size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not a number: " + v);
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  void apply_env_overrides() {
    for (auto& [key, value] : values_) {
      std::string env_key = "DELAYBANDIT_";
      for (char ch : key) env_key += char(std::toupper((unsigned char)ch));
      if (const char* v = std::getenv(env_key.c_str())) value = v;
    }
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

inline std::vector<double> parse_number_list(const std::string& s,
                                             const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
    } catch (const std::exception&) {
      throw ConfigError(what + ": bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

// Loss-matrix file: one row per round, K comma-separated decimals in [0,1].
inline std::vector<std::vector<double>> read_loss_matrix(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open loss-matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError(path + ": row " + std::to_string(lineno) +
                          ": bad value '" + tok + "'");
      }
    }
    for (double v : row)
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(path + ": row " + std::to_string(lineno) +
                          ": loss outside [0,1]");
    if (!rows.empty() && row.size() != rows[0].size())
      throw ConfigError(path + ": row " + std::to_string(lineno) +
                        ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": empty loss matrix");
  return rows;
}

// Delay-list file: one non-negative integer per line.
inline std::vector<int> read_delay_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open delay-list file: " + path);
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      std::size_t pos = 0;
      long v = std::stol(line, &pos);
      if (v < 0) throw std::invalid_argument(line);
      out.push_back(int(v));
    } catch (const std::exception&) {
      throw ConfigError(path + ": line " + std::to_string(lineno) +
                        ": bad delay '" + line + "'");
    }
  }
  if (out.empty()) throw ConfigError(path + ": empty delay list");
  return out;
}

// Range-sequence file: one decimal per line. Permutation file: one 1-based
// index per line; omitted permutation defaults to identity.
inline std::vector<double> read_range_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open range file: " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ConfigError(path + ": line " + std::to_string(lineno) +
                        ": bad range '" + line + "'");
    }
  }
  if (out.empty()) throw ConfigError(path + ": empty range file");
  return out;
}

inline std::vector<int> read_permutation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open permutation file: " + path);
  std::vector<int> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(std::stoi(line));
  }
  return out;
}

// Gap file for the asymmetric-gamma variant: one positive decimal per
// line, K lines; the best arm's slot carries a caller-chosen surrogate.
inline std::vector<double> read_gap_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gap file: " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v = 0.0;
    try {
      v = std::stod(line);
    } catch (const std::exception&) {
      throw ConfigError(path + ": line " + std::to_string(lineno) +
                        ": bad gap '" + line + "'");
    }
    if (!(v > 0.0))
      throw ConfigError(path + ": line " + std::to_string(lineno) +
                        ": gaps must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(path + ": empty gap file");
  return out;
}

}  // namespace delaybandit
