#ifndef WMTRACK_TRAJECTORY_IO_HPP
#define WMTRACK_TRAJECTORY_IO_HPP

// Trajectory files (CSV or JSON lines) and atomic file writes.

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmtrack/config.hpp"
#include "wmtrack/errors.hpp"
#include "wmtrack/trajectory.hpp"

namespace wmtrack {

inline constexpr const char* kCsvHeader = "step,t_over_TR,outcome,c1sq_measured,c1sq_free,estimate";

namespace detail {

inline int outcome_bit(Outcome m) { return m == Outcome::plus ? 1 : 0; }

inline Outcome outcome_from_bit(long b, std::size_t line) {
  if (b == 1) return Outcome::plus;
  if (b == 0) return Outcome::minus;
  throw IoError("trajectory line " + std::to_string(line) + ": outcome must be 0 or 1");
}

}  // namespace detail

/// Row order and field names are fixed; outcome is 1 for "+" and 0 for "-".
/// Reals are written with 17 significant digits.
inline void write_trajectory(std::ostream& out, const std::vector<TrajectoryPoint>& points, OutputFormat format) {
  char buf[256];
  if (format == OutputFormat::csv) {
    out << kCsvHeader << '\n';
    for (const auto& p : points) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g,%.17g,%.17g\n", p.step, p.time, detail::outcome_bit(p.outcome),
                    p.c1sq_measured, p.c1sq_free, p.estimate);
      out << buf;
    }
  } else {
    for (const auto& p : points) {
      nlohmann::ordered_json j;
      j["step"] = p.step;
      j["t_over_TR"] = p.time;
      j["outcome"] = detail::outcome_bit(p.outcome);
      j["c1sq_measured"] = p.c1sq_measured;
      j["c1sq_free"] = p.c1sq_free;
      j["estimate"] = p.estimate;
      out << j.dump() << '\n';
    }
  }
}

inline std::string format_trajectory(const std::vector<TrajectoryPoint>& points, OutputFormat format) {
  std::ostringstream o;
  write_trajectory(o, points, format);
  return o.str();
}

/// Reads either format; JSON lines are recognised by a leading '{'.
inline std::vector<TrajectoryPoint> parse_trajectory(std::istream& in) {
  std::vector<TrajectoryPoint> points;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    TrajectoryPoint p;
    if (line.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(line);
        p.step = j.at("step").get<std::size_t>();
        p.time = j.at("t_over_TR").get<double>();
        p.outcome = detail::outcome_from_bit(j.at("outcome").get<long>(), lineno);
        p.c1sq_measured = j.at("c1sq_measured").get<double>();
        p.c1sq_free = j.at("c1sq_free").get<double>();
        p.estimate = j.at("estimate").get<double>();
      } catch (const nlohmann::json::exception& e) {
        throw IoError("trajectory line " + std::to_string(lineno) + ": " + e.what());
      }
    } else {
      if (!header_seen) {
        if (line != kCsvHeader) throw IoError("trajectory: expected CSV header '" + std::string(kCsvHeader) + "'");
        header_seen = true;
        continue;
      }
      unsigned long long step = 0;
      int outcome = 0;
      int consumed = 0;
      if (std::sscanf(line.c_str(), "%llu,%lf,%d,%lf,%lf,%lf%n", &step, &p.time, &outcome, &p.c1sq_measured,
                      &p.c1sq_free, &p.estimate, &consumed) != 6 ||
          static_cast<std::size_t>(consumed) != line.size())
        throw IoError("trajectory line " + std::to_string(lineno) + ": malformed CSV row");
      p.step = step;
      p.outcome = detail::outcome_from_bit(outcome, lineno);
    }
    points.push_back(p);
  }
  return points;
}

inline std::vector<TrajectoryPoint> parse_trajectory(const std::string& text) {
  std::istringstream in(text);
  return parse_trajectory(in);
}

inline std::vector<TrajectoryPoint> read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory '" + path + "': " + std::strerror(errno));
  return parse_trajectory(in);
}

/// Writes `contents` to `path` through a sibling temporary and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "': " + std::strerror(errno));
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "': " + std::strerror(errno));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

}  // namespace wmtrack

#endif  // WMTRACK_TRAJECTORY_IO_HPP
