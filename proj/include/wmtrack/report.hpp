#ifndef WMTRACK_REPORT_HPP
#define WMTRACK_REPORT_HPP

// Human-readable and JSON renderings of run and analysis results.

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wmtrack/analysis.hpp"
#include "wmtrack/config.hpp"
#include "wmtrack/trajectory.hpp"

namespace wmtrack {

inline std::string format_analysis(const AnalysisSummary& s) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "window cycles: %g\n", s.window_cycles);
  o << buf;
  o << "   t_begin     t_end  points  rms(g-c1sq)  amp_meas  amp_free  per_meas  per_free  dphase\n";
  auto row = [&](const char* label, const WindowSummary& w) {
    std::snprintf(buf, sizeof buf, "%10.4f %9.4f %7zu %12.6f %9.6f %9.6f %9.6f %9.6f %7.4f%s\n", w.t_begin, w.t_end,
                  w.points, w.tracking_rms, w.measured.amplitude, w.free.amplitude, w.measured.period, w.free.period,
                  w.phase_shift, label);
    o << buf;
  };
  for (const auto& w : s.windows) row("", w);
  row("  early", s.early);
  row("  late", s.late);
  return o.str();
}

inline nlohmann::ordered_json to_json(const FitResult& f) {
  return {{"amplitude", f.amplitude}, {"phase", f.phase}, {"period", f.period}, {"rms_residual", f.rms_residual}};
}

inline nlohmann::ordered_json to_json(const WindowSummary& w) {
  return {{"t_begin", w.t_begin},
          {"t_end", w.t_end},
          {"points", w.points},
          {"tracking_rms", w.tracking_rms},
          {"measured", to_json(w.measured)},
          {"free", to_json(w.free)},
          {"phase_shift", w.phase_shift}};
}

inline nlohmann::ordered_json to_json(const AnalysisSummary& s) {
  nlohmann::ordered_json j;
  j["window_cycles"] = s.window_cycles;
  j["windows"] = nlohmann::ordered_json::array();
  for (const auto& w : s.windows) j["windows"].push_back(to_json(w));
  j["early"] = to_json(s.early);
  j["late"] = to_json(s.late);
  return j;
}

/// Summary written next to a run's trajectory.
inline std::string format_run_summary(const ExperimentConfig& cfg, const RunResult& result,
                                      const std::optional<AnalysisSummary>& analysis,
                                      const std::string& analysis_error = {}) {
  const RunConfig& r = cfg.run;
  std::ostringstream o;
  char buf[256];
  o << "wmtrack " << kToolVersion << " run summary\n";
  o << "seed: " << r.seed << '\n';
  o << "precision bits: " << r.precision_bits << '\n';
  o << "steps: " << result.points.size() << '\n';
  std::snprintf(buf, sizeof buf, "p0+ = %.17g, p1+ = %.17g, tau/T_R = %.17g\n", r.p0_plus(), r.p1_plus(),
                r.tau_over_TR);
  o << buf;
  if (r.dp != 0.0) {
    const RegimeReport reg = regime_report(r.model(), r.tau_over_TR);
    std::snprintf(buf, sizeof buf, "decoherence time: %.6g tau = %.6g T_R, mode (%s)\n", reg.t_d_tau, reg.t_d_TR,
                  to_string(reg.mode));
    o << buf;
  } else {
    o << "decoherence time: infinite (dp = 0)\n";
  }
  o << "max cancellation bits: " << result.max_cancellation_bits << '\n';
  if (r.oracle_check_every)
    o << "oracle checks passed: " << result.oracle_checks_passed << " (every " << *r.oracle_check_every
      << " steps)\n";
  else
    o << "oracle checks: disabled\n";
  if (analysis)
    o << format_analysis(*analysis);
  else if (!analysis_error.empty())
    o << "analysis skipped: " << analysis_error << '\n';
  return o.str();
}

}  // namespace wmtrack

#endif  // WMTRACK_REPORT_HPP
