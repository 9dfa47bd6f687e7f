#ifndef WMTRACK_TRAJECTORY_HPP
#define WMTRACK_TRAJECTORY_HPP

// Seeded simulation of a Rabi-oscillating qubit under a sequence of weak
// measurements, with the Bayesian estimate updated after every outcome, plus
// the regime analytics (decoherence time, measurement mode, tuning).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "wmtrack/errors.hpp"
#include "wmtrack/estimator.hpp"
#include "wmtrack/qcore.hpp"

namespace wmtrack {

/// Parses an initial-state spec: "1", "0", "+", "-" or "bloch:THETA:PHASE"
/// (radians; theta = 0 is |1>, see QubitState::from_bloch).
inline QubitState parse_initial_state(const std::string& spec) {
  if (spec == "1") return QubitState::excited();
  if (spec == "0") return QubitState::ground();
  if (spec == "+") return QubitState(1.0, 1.0);
  if (spec == "-") return QubitState(1.0, -1.0);
  if (spec.rfind("bloch:", 0) == 0) {
    const auto rest = spec.substr(6);
    const auto colon = rest.find(':');
    if (colon != std::string::npos) {
      try {
        std::size_t used_theta = 0, used_phase = 0;
        const std::string ts = rest.substr(0, colon), ps = rest.substr(colon + 1);
        const double theta = std::stod(ts, &used_theta);
        const double phase = std::stod(ps, &used_phase);
        if (used_theta == ts.size() && used_phase == ps.size() && std::isfinite(theta) && std::isfinite(phase))
          return QubitState::from_bloch(theta, phase);
      } catch (const std::logic_error&) {
      }
    }
  }
  throw ConfigError("initial_state", "expected 1, 0, +, - or bloch:THETA:PHASE, got '" + spec + "'");
}

struct RunConfig {
  double pbar = 0.5;
  double dp = 0.1;
  /// Sampling interval tau in units of the Rabi period T_R.
  double tau_over_TR = 1.0 / 16.0;
  std::size_t n_max = 2112;
  std::uint64_t seed = 1;
  long precision_bits = default_precision_bits();
  std::string initial_state = "1";
  /// Cross-check the recursion against the quadrature every this many steps.
  std::optional<std::size_t> oracle_check_every;
  /// Prior range for phi. The recursion only implements the full circle.
  PhiRange phi_range;

  double p0_plus() const { return pbar - 0.5 * dp; }
  double p1_plus() const { return pbar + 0.5 * dp; }
  MeasurementModel model() const { return MeasurementModel(p0_plus(), p1_plus()); }
  RotationAngle rotation() const { return RotationAngle::from_sampling_ratio(tau_over_TR); }

  /// Throws ConfigError naming the violated invariant.
  void validate() const {
    auto open_unit = [](double p) { return p > 0.0 && p < 1.0; };
    if (!std::isfinite(pbar) || !std::isfinite(dp)) throw ConfigError("pbar/dp", "must be finite");
    std::string violated;
    if (!open_unit(p1_plus()))
      violated = "p1_plus = pbar + dp/2 = " + std::to_string(p1_plus()) + " violates p1_plus in (0,1)";
    if (!open_unit(p0_plus()))
      violated += (violated.empty() ? "" : "; ") + std::string("p0_plus = pbar - dp/2 = ") +
                  std::to_string(p0_plus()) + " violates p0_plus in (0,1)";
    if (!violated.empty()) throw ConfigError("dp", violated);
    if (!(tau_over_TR > 0.0) || !std::isfinite(tau_over_TR)) throw ConfigError("tau_over_TR", "must be > 0");
    if (n_max < 1) throw ConfigError("n_max", "must be >= 1");
    if (precision_bits < kMinPrecisionBits)
      throw ConfigError("precision_bits", "must be >= " + std::to_string(kMinPrecisionBits));
    if (oracle_check_every && *oracle_check_every == 0) throw ConfigError("oracle_check_every", "must be >= 1");
    if (!phi_range.is_full())
      throw ConfigError("phi_range",
                        "the coefficient recursion integrates phi over [0, 2pi) only; restricted ranges are "
                        "available through estimate_oracle");
    parse_initial_state(initial_state);
  }
};

struct TrajectoryPoint {
  std::size_t step = 0;
  /// t / T_R.
  double time = 0.0;
  Outcome outcome = Outcome::plus;
  /// |c1|^2 of the measured (disturbed) state.
  double c1sq_measured = 0.0;
  /// |c1|^2 of the unmeasured reference.
  double c1sq_free = 0.0;
  double estimate = 0.5;
};

struct RunResult {
  std::vector<TrajectoryPoint> points;
  std::size_t oracle_checks_passed = 0;
  /// Worst cancellation seen in the closed-form integral.
  long max_cancellation_bits = 0;
};

/// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Outcome sample_outcome(const QubitState& state, const MeasurementModel& model, std::mt19937_64& rng) {
  return uniform01(rng) < outcome_probability(state, model, Outcome::plus) ? Outcome::plus : Outcome::minus;
}

inline constexpr double kOracleTolerance = 1e-8;

/// Runs n_max steps of: rotate both states by phi, sample an outcome from the
/// measured state, collapse it, update the estimate. Deterministic in the seed.
/// `on_point`, if given, sees every point as it is produced.
inline RunResult run_simulation(const RunConfig& config,
                                const std::function<void(const TrajectoryPoint&)>& on_point = {}) {
  config.validate();
  const MeasurementModel model = config.model();
  const RotationAngle phi = config.rotation();
  const Observable projector;
  const auto bits = static_cast<mpfr_prec_t>(config.precision_bits);

  std::mt19937_64 rng(config.seed);
  QubitState measured = parse_initial_state(config.initial_state);
  QubitState free = measured;
  CoefficientTable table(bits);
  BWeights weights(bits);
  MeasurementRecord record;
  const KrausOperator n_plus = kraus_of(model, Outcome::plus);
  const KrausOperator n_minus = kraus_of(model, Outcome::minus);

  RunResult result;
  result.points.reserve(config.n_max);
  for (std::size_t n = 1; n <= config.n_max; ++n) {
    measured = evolve(measured, phi);
    free = evolve(free, phi);
    const Outcome m = sample_outcome(measured, model, rng);
    const KrausOperator& kraus = m == Outcome::plus ? n_plus : n_minus;
    measured = apply_measurement(measured, kraus);
    table.update(kraus);
    const TableEstimate est = estimate_from_table_detailed(table, projector, weights);
    result.max_cancellation_bits = std::max(result.max_cancellation_bits, est.cancellation_bits);

    if (config.oracle_check_every) {
      record.push_back(kraus);
      if (n % *config.oracle_check_every == 0) {
        const double reference = estimate_oracle(record, projector);
        if (!(std::abs(reference - est.value) <= kOracleTolerance))
          throw OracleMismatch("step " + std::to_string(n) + ": recursion " + std::to_string(est.value) +
                               " vs quadrature " + std::to_string(reference));
        ++result.oracle_checks_passed;
      }
    }

    TrajectoryPoint pt;
    pt.step = n;
    pt.time = static_cast<double>(n) * config.tau_over_TR;
    pt.outcome = m;
    pt.c1sq_measured = measured.excited_population();
    pt.c1sq_free = free.excited_population();
    pt.estimate = est.value;
    if (on_point) on_point(pt);
    result.points.push_back(pt);
  }
  return result;
}

/// Runs independent configurations on up to `workers` threads. Each run owns
/// its state; results come back in input order.
inline std::vector<RunResult> run_many(std::span<const RunConfig> configs, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = run_simulation(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < std::min<std::size_t>(workers, configs.size()); ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---------------------------------------------------------------------------
// Regime analytics

/// T_d = 8 tau pbar (1 - pbar) / dp^2, in the units of tau.
inline double decoherence_time(double pbar, double dp, double tau) {
  if (dp == 0.0) throw NoDecoherence("decoherence_time: dp = 0, coherences never decay");
  return 8.0 * tau * pbar * (1.0 - pbar) / (dp * dp);
}

inline double decoherence_time(const MeasurementModel& model, double tau) {
  return decoherence_time(model.pbar(), model.dp(), tau);
}

/// Exact per-measurement multiplier of <0|rho|1> under rho -> N+ rho N+ + N- rho N-:
/// sqrt(p0+ p1+) + sqrt(p0- p1-).
inline double coherence_decay_factor(double pbar, double dp) {
  const double p0 = pbar - 0.5 * dp, p1 = pbar + 0.5 * dp;
  return std::sqrt(p0 * p1) + std::sqrt((1.0 - p0) * (1.0 - p1));
}

inline double coherence_decay_factor(const MeasurementModel& model) {
  return std::sqrt(model.p0_plus() * model.p1_plus()) + std::sqrt(model.p0_minus() * model.p1_minus());
}

enum class Mode { i, ii, iii };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::i: return "i";
    case Mode::ii: return "ii";
    case Mode::iii: return "iii";
  }
  return "?";
}

inline constexpr double kWeakModeRatio = 5.0;
inline constexpr double kStrongModeRatio = 0.2;

/// (i) T_d >> T_R, (ii) T_d ~ T_R, (iii) T_d << T_R, split at ratios 5 and 0.2.
inline Mode classify_mode(double t_d, double t_r) {
  if (!(t_d > 0.0) || !(t_r > 0.0)) throw std::invalid_argument("classify_mode: times must be positive");
  const double r = t_d / t_r;
  if (r >= kWeakModeRatio) return Mode::i;
  if (r <= kStrongModeRatio) return Mode::iii;
  return Mode::ii;
}

struct RegimeReport {
  /// Decoherence time in units of tau and of T_R.
  double t_d_tau = 0.0;
  double t_d_TR = 0.0;
  double ratio = 0.0;
  Mode mode = Mode::ii;
};

inline RegimeReport regime_report(const MeasurementModel& model, double tau_over_TR) {
  RegimeReport r;
  r.t_d_tau = decoherence_time(model, 1.0);
  r.t_d_TR = decoherence_time(model, tau_over_TR);
  r.ratio = r.t_d_TR;
  r.mode = classify_mode(r.t_d_TR, 1.0);
  return r;
}

struct TunedParameters {
  double tau;
  MeasurementModel model;
};

/// Picks tau from the lower bound on T_R, then dp so that
/// 8 pbar (1 - pbar) / dp^2 = weakness * T_R^> / tau with pbar = 1/2.
inline TunedParameters tune_parameters(double t_r_lower, double t_r_upper, double samples_per_period,
                                       double weakness) {
  if (!(t_r_lower > 0.0) || !(t_r_lower < t_r_upper))
    throw InvalidBounds("tune_parameters: need 0 < lower < upper, got [" + std::to_string(t_r_lower) + ", " +
                        std::to_string(t_r_upper) + "]");
  if (!(samples_per_period >= 10.0)) throw std::invalid_argument("tune_parameters: samples_per_period must be >= 10");
  if (!(weakness >= 1.0)) throw std::invalid_argument("tune_parameters: weakness must be >= 1");
  const double tau = t_r_lower / samples_per_period;
  const double pbar = 0.5;
  const double dp = std::sqrt(8.0 * pbar * (1.0 - pbar) * tau / (weakness * t_r_upper));
  return {tau, MeasurementModel::from_mean_difference(pbar, dp)};
}

}  // namespace wmtrack

#endif  // WMTRACK_TRAJECTORY_HPP
