#ifndef WMTRACK_CONFIG_HPP
#define WMTRACK_CONFIG_HPP

// Flat `key = value` run configuration files. `#` starts a comment. Keys are
// the RunConfig fields plus `cycles` (converted to n_max) and `format`.
// Keys under `meta.` are informational and ignored, so a run's metadata
// file can be fed back in as a config.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wmtrack/errors.hpp"
#include "wmtrack/trajectory.hpp"

namespace wmtrack {

inline constexpr const char* kToolVersion = "1.0.0";

enum class OutputFormat { csv, jsonl };

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "jsonl"; }

struct ExperimentConfig {
  RunConfig run;
  OutputFormat format = OutputFormat::csv;
};

struct ConfigValue {
  std::string value;
  /// 1-based source line, 0 for command-line overrides.
  int line = 0;
};

using ConfigMap = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const ConfigValue& v) {
  const char* begin = v.value.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + v.value + "'", v.line);
  return x;
}

inline unsigned long long parse_unsigned(const std::string& key, const ConfigValue& v) {
  const char* begin = v.value.c_str();
  char* end = nullptr;
  errno = 0;
  if (!v.value.empty() && v.value[0] == '-') throw ConfigError(key, "expected a non-negative integer, got '" + v.value + "'", v.line);
  const unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ConfigError(key, "expected a non-negative integer, got '" + v.value + "'", v.line);
  return x;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Parses `key = value` lines. Duplicate keys and malformed lines are errors.
inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", "expected 'key = value', got '" + std::string(s) + "'", line);
    const std::string key(detail::trim(s.substr(0, eq)));
    const std::string value(detail::trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError("", "missing key", line);
    if (value.empty()) throw ConfigError(key, "missing value", line);
    if (out.contains(key)) throw ConfigError(key, "duplicate key (first set on line " + std::to_string(out[key].line) + ")", line);
    out[key] = {value, line};
  }
  return out;
}

inline ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "': " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Overlays command-line overrides on file values. Setting one of cycles /
/// n_max on the command line drops the other from the file.
inline ConfigMap merge_config(ConfigMap file, const ConfigMap& overrides) {
  if (overrides.contains("cycles")) file.erase("n_max");
  if (overrides.contains("n_max")) file.erase("cycles");
  for (const auto& [k, v] : overrides) file[k] = v;
  return file;
}

/// Builds and validates an experiment from merged keys. Unset keys keep the
/// RunConfig defaults. `precision_bits = auto` picks a precision sized for n_max.
inline ExperimentConfig build_config(const ConfigMap& keys) {
  ExperimentConfig cfg;
  RunConfig& r = cfg.run;
  std::optional<double> cycles;
  bool auto_precision = false;
  for (const auto& [key, v] : keys) {
    if (key.rfind("meta.", 0) == 0) continue;
    if (key == "pbar") r.pbar = detail::parse_double(key, v);
    else if (key == "dp") r.dp = detail::parse_double(key, v);
    else if (key == "tau_over_TR") r.tau_over_TR = detail::parse_double(key, v);
    else if (key == "n_max") r.n_max = detail::parse_unsigned(key, v);
    else if (key == "cycles") cycles = detail::parse_double(key, v);
    else if (key == "seed") r.seed = detail::parse_unsigned(key, v);
    else if (key == "precision_bits") {
      if (v.value == "auto") auto_precision = true;
      else r.precision_bits = static_cast<long>(detail::parse_unsigned(key, v));
    } else if (key == "initial_state") {
      r.initial_state = v.value;
      try {
        parse_initial_state(r.initial_state);
      } catch (const ConfigError& e) {
        throw ConfigError(key, e.message(), v.line);
      }
    } else if (key == "oracle_check_every") {
      if (v.value == "none") r.oracle_check_every.reset();
      else r.oracle_check_every = detail::parse_unsigned(key, v);
    } else if (key == "phi_range") {
      const auto colon = v.value.find(':');
      if (colon == std::string::npos) throw ConfigError(key, "expected LO:HI in radians", v.line);
      r.phi_range.lo = detail::parse_double(key, {v.value.substr(0, colon), v.line});
      r.phi_range.hi = detail::parse_double(key, {v.value.substr(colon + 1), v.line});
    } else if (key == "format") {
      if (v.value == "csv") cfg.format = OutputFormat::csv;
      else if (v.value == "jsonl") cfg.format = OutputFormat::jsonl;
      else throw ConfigError(key, "expected csv or jsonl, got '" + v.value + "'", v.line);
    } else {
      throw ConfigError(key, "unknown key", v.line);
    }
  }
  if (cycles) {
    if (keys.contains("n_max")) throw ConfigError("cycles", "set either cycles or n_max, not both", keys.at("cycles").line);
    if (!(*cycles > 0.0)) throw ConfigError("cycles", "must be > 0", keys.at("cycles").line);
    if (!(r.tau_over_TR > 0.0)) throw ConfigError("tau_over_TR", "must be > 0", keys.contains("tau_over_TR") ? keys.at("tau_over_TR").line : 0);
    r.n_max = static_cast<std::size_t>(std::llround(*cycles / r.tau_over_TR));
  }
  if (auto_precision) r.precision_bits = precision_for_steps(r.n_max);

  try {
    r.validate();
  } catch (const ConfigError& e) {
    // Point at the line that set the offending field when there is one.
    int line = 0;
    for (const auto& k : {e.field(), std::string(e.field() == "dp" ? "pbar" : "")})
      if (!k.empty() && keys.contains(k)) {
        line = keys.at(k).line;
        break;
      }
    if (line == 0) throw;
    throw ConfigError(e.field(), e.message(), line);
  }
  return cfg;
}

/// Serializes every configurable parameter in the file format above, with
/// `extra` written as informational meta.* keys.
inline std::string format_config(const ExperimentConfig& cfg,
                                 const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  const RunConfig& r = cfg.run;
  std::ostringstream o;
  o << "# wmtrack run configuration\n";
  o << "pbar = " << detail::format_double(r.pbar) << '\n';
  o << "dp = " << detail::format_double(r.dp) << '\n';
  o << "tau_over_TR = " << detail::format_double(r.tau_over_TR) << '\n';
  o << "n_max = " << r.n_max << '\n';
  o << "seed = " << r.seed << '\n';
  o << "precision_bits = " << r.precision_bits << '\n';
  o << "initial_state = " << r.initial_state << '\n';
  o << "oracle_check_every = " << (r.oracle_check_every ? std::to_string(*r.oracle_check_every) : "none") << '\n';
  o << "phi_range = " << detail::format_double(r.phi_range.lo) << ':' << detail::format_double(r.phi_range.hi) << '\n';
  o << "format = " << to_string(cfg.format) << '\n';
  for (const auto& [k, v] : extra) o << "meta." << k << " = " << v << '\n';
  return o.str();
}

}  // namespace wmtrack

#endif  // WMTRACK_CONFIG_HPP
