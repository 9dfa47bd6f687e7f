#ifndef WMTRACK_ANALYSIS_HPP
#define WMTRACK_ANALYSIS_HPP

// Post-hoc analysis of a trajectory: tracking error of the estimate, and
// sinusoid fits of |c1|^2 = (1 + a cos(2 pi (t - t0) / period + phase)) / 2
// for the measured and the free evolution, window by window.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wmtrack/errors.hpp"
#include "wmtrack/qcore.hpp"
#include "wmtrack/trajectory.hpp"

namespace wmtrack {

struct FitResult {
  double amplitude = 0.0;
  /// Phase at the reference time t0 (the window start), radians in (-pi, pi].
  double phase = 0.0;
  /// In units of T_R.
  double period = 1.0;
  double rms_residual = 0.0;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double x) {
  double r = std::remainder(x, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

namespace detail {

struct LinearFit {
  double alpha = 0.0;  // coefficient of cos
  double beta = 0.0;   // coefficient of sin
  double sse = 0.0;
};

/// Least squares of z = 2y - 1 against alpha cos(w t) + beta sin(w t).
inline LinearFit fit_fixed_period(std::span<const double> t, std::span<const double> y, double period) {
  const double w = kTwoPi / period;
  double scc = 0, sss = 0, scs = 0, szc = 0, szs = 0, szz = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double c = std::cos(w * t[i]), s = std::sin(w * t[i]);
    const double z = 2.0 * y[i] - 1.0;
    scc += c * c;
    sss += s * s;
    scs += c * s;
    szc += z * c;
    szs += z * s;
    szz += z * z;
  }
  LinearFit f;
  const double det = scc * sss - scs * scs;
  if (std::abs(det) < 1e-300) {
    f.sse = szz;
    return f;
  }
  f.alpha = (szc * sss - szs * scs) / det;
  f.beta = (szs * scc - szc * scs) / det;
  // Residual sum of squares of z, summed directly: the normal-equation shortcut
  // cancels down to ~1e-14 and would blur the period near an exact fit.
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = 2.0 * y[i] - 1.0 - f.alpha * std::cos(w * t[i]) - f.beta * std::sin(w * t[i]);
    f.sse += r * r;
  }
  return f;
}

}  // namespace detail

inline constexpr std::size_t kMinFitPoints = 8;
inline constexpr double kMinPeriod = 0.5;
inline constexpr double kMaxPeriod = 2.0;
inline constexpr double kPeriodGridStep = 1e-3;

/// Separable least squares: scan the period over [0.5, 2] at 1e-3 resolution,
/// solving amplitude and phase linearly at each candidate, then refine the
/// best cell by golden-section search. Times are taken relative to `t0`.
inline FitResult fit_oscillation(std::span<const double> times, std::span<const double> values, double t0) {
  if (times.size() != values.size()) throw std::invalid_argument("fit_oscillation: size mismatch");
  if (times.size() < kMinFitPoints)
    throw InsufficientData("fit_oscillation: " + std::to_string(times.size()) + " points, need " +
                           std::to_string(kMinFitPoints));
  std::vector<double> t(times.begin(), times.end());
  for (double& x : t) x -= t0;

  auto sse = [&](double period) { return detail::fit_fixed_period(t, values, period).sse; };

  const auto steps = static_cast<std::size_t>(std::lround((kMaxPeriod - kMinPeriod) / kPeriodGridStep));
  double best_period = kMinPeriod, best_sse = sse(kMinPeriod);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double p = kMinPeriod + kPeriodGridStep * static_cast<double>(i);
    const double e = sse(p);
    if (e < best_sse) {
      best_sse = e;
      best_period = p;
    }
  }

  double lo = std::max(kMinPeriod, best_period - kPeriodGridStep);
  double hi = std::min(kMaxPeriod, best_period + kPeriodGridStep);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = sse(x1), f2 = sse(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = sse(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = sse(x2);
    }
  }
  double refined = 0.5 * (lo + hi);
  // Golden section stalls near sqrt(eps) on a quadratic minimum; finish with a parabola vertex.
  const double h = 1e-4;
  if (refined - h >= kMinPeriod && refined + h <= kMaxPeriod) {
    const double fm = sse(refined - h), f0 = sse(refined), fp = sse(refined + h);
    const double curv = fp - 2.0 * f0 + fm;
    if (curv > 0.0) {
      const double vertex = refined - 0.5 * h * (fp - fm) / curv;
      if (std::abs(vertex - refined) < h && sse(vertex) <= f0) refined = vertex;
    }
  }
  const double period = sse(refined) <= best_sse ? refined : best_period;

  const auto lin = detail::fit_fixed_period(t, values, period);
  FitResult r;
  r.period = period;
  r.amplitude = std::hypot(lin.alpha, lin.beta);
  r.phase = wrap_angle(std::atan2(-lin.beta, lin.alpha));
  r.rms_residual = 0.5 * std::sqrt(lin.sse / static_cast<double>(t.size()));
  return r;
}

struct WindowSummary {
  /// Covers points with t_begin < t <= t_end (units of T_R).
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t points = 0;
  /// RMS of estimate - c1sq_measured.
  double tracking_rms = 0.0;
  FitResult measured;
  FitResult free;
  /// measured.phase - free.phase, wrapped into (-pi, pi].
  double phase_shift = 0.0;
};

inline WindowSummary analyze_window(std::span<const TrajectoryPoint> points, double t_begin, double t_end) {
  std::vector<double> t, measured, free;
  double sq = 0.0;
  for (const auto& p : points) {
    if (!(p.time > t_begin && p.time <= t_end)) continue;
    t.push_back(p.time);
    measured.push_back(p.c1sq_measured);
    free.push_back(p.c1sq_free);
    const double d = p.estimate - p.c1sq_measured;
    sq += d * d;
  }
  if (t.size() < kMinFitPoints)
    throw InsufficientData("window (" + std::to_string(t_begin) + ", " + std::to_string(t_end) + "] holds " +
                           std::to_string(t.size()) + " points, need " + std::to_string(kMinFitPoints));
  WindowSummary w;
  w.t_begin = t_begin;
  w.t_end = t_end;
  w.points = t.size();
  w.tracking_rms = std::sqrt(sq / static_cast<double>(t.size()));
  w.measured = fit_oscillation(t, measured, t_begin);
  w.free = fit_oscillation(t, free, t_begin);
  w.phase_shift = wrap_angle(w.measured.phase - w.free.phase);
  return w;
}

struct AnalysisSummary {
  double window_cycles = 0.0;
  /// Consecutive windows from the start of the trajectory. A trailing
  /// remainder too short to fit is folded into the last window.
  std::vector<WindowSummary> windows;
  /// The first and the last window_cycles of the trajectory.
  WindowSummary early;
  WindowSummary late;
};

inline AnalysisSummary analyze(std::span<const TrajectoryPoint> points, double window_cycles) {
  if (points.empty()) throw InsufficientData("analyze: empty trajectory");
  if (!(window_cycles >= 1.0)) throw std::invalid_argument("analyze: window_cycles must be >= 1");
  const double start = points.front().time - (points.size() > 1 ? points[1].time - points[0].time : 0.0);
  const double end = points.back().time;

  auto count_in = [&](double lo, double hi) {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(),
                                                  [&](const TrajectoryPoint& p) { return p.time > lo && p.time <= hi; }));
  };

  AnalysisSummary s;
  s.window_cycles = window_cycles;
  std::vector<std::pair<double, double>> bounds;
  for (double lo = start; lo < end; lo += window_cycles) bounds.emplace_back(lo, std::min(lo + window_cycles, end));
  if (bounds.size() > 1 && count_in(bounds.back().first, bounds.back().second) < kMinFitPoints) {
    bounds[bounds.size() - 2].second = bounds.back().second;
    bounds.pop_back();
  }
  for (const auto& [lo, hi] : bounds) s.windows.push_back(analyze_window(points, lo, hi));
  s.early = analyze_window(points, start, std::min(start + window_cycles, end));
  s.late = analyze_window(points, std::max(start, end - window_cycles), end);
  return s;
}

struct Extrema {
  std::vector<double> maxima;
  std::vector<double> minima;
};

/// Interior local extrema of a sampled curve (strict on the left, non-strict on the right).
inline Extrema local_extrema(std::span<const double> y) {
  Extrema e;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) e.maxima.push_back(y[i]);
    if (y[i] < y[i - 1] && y[i] <= y[i + 1]) e.minima.push_back(y[i]);
  }
  return e;
}

}  // namespace wmtrack

#endif  // WMTRACK_ANALYSIS_HPP
