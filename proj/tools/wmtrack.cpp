// wmtrack: simulate a weakly monitored Rabi oscillation and track it with the
// Bayesian estimator.
//
//   wmtrack run --config long_run.cfg --out run.csv
//   wmtrack analyze --in run.csv --window-cycles 5
//   wmtrack tune --tr-lower 0.9 --tr-upper 1.1
//   wmtrack selftest
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wmtrack/analysis.hpp"
#include "wmtrack/config.hpp"
#include "wmtrack/errors.hpp"
#include "wmtrack/report.hpp"
#include "wmtrack/selftest.hpp"
#include "wmtrack/trajectory.hpp"
#include "wmtrack/trajectory_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct RunOptions {
  std::string config_path;
  std::string out;
  std::optional<std::string> pbar, dp, tau_over_tr, cycles, n_max, seed, precision_bits, oracle_check_every,
      initial_state, format;
  double window_cycles = 5.0;
};

int cmd_run(const RunOptions& o) {
  wmtrack::ConfigMap file;
  if (!o.config_path.empty()) file = wmtrack::read_config_file(o.config_path);
  wmtrack::ConfigMap overrides;
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) overrides[key] = {*v, 0};
  };
  put("pbar", o.pbar);
  put("dp", o.dp);
  put("tau_over_TR", o.tau_over_tr);
  put("cycles", o.cycles);
  put("n_max", o.n_max);
  put("seed", o.seed);
  put("precision_bits", o.precision_bits);
  put("oracle_check_every", o.oracle_check_every);
  put("initial_state", o.initial_state);
  put("format", o.format);

  const wmtrack::ExperimentConfig cfg = wmtrack::build_config(wmtrack::merge_config(std::move(file), overrides));
  std::string out = o.out;
  if (out.empty()) out = cfg.format == wmtrack::OutputFormat::csv ? "trajectory.csv" : "trajectory.jsonl";

  std::cerr << "effective configuration:\n" << wmtrack::format_config(cfg);
  const wmtrack::RunResult result = wmtrack::run_simulation(cfg.run);

  std::optional<wmtrack::AnalysisSummary> analysis;
  std::string analysis_error;
  try {
    analysis = wmtrack::analyze(result.points, o.window_cycles);
  } catch (const wmtrack::InsufficientData& e) {
    analysis_error = e.what();
  }

  const std::string summary = wmtrack::format_run_summary(cfg, result, analysis, analysis_error);
  wmtrack::write_file_atomic(out, wmtrack::format_trajectory(result.points, cfg.format));
  wmtrack::write_file_atomic(out + ".meta",
                             wmtrack::format_config(cfg, {{"tool_version", wmtrack::kToolVersion},
                                                          {"steps", std::to_string(result.points.size())},
                                                          {"trajectory", std::filesystem::path(out).filename()}}));
  wmtrack::write_file_atomic(out + ".summary.txt", summary);
  std::cout << summary;
  return 0;
}

int cmd_analyze(const std::string& in, double window_cycles, const std::string& json_out) {
  const auto points = wmtrack::read_trajectory_file(in);
  const auto s = wmtrack::analyze(points, window_cycles);
  std::cout << wmtrack::format_analysis(s);
  if (!json_out.empty()) wmtrack::write_file_atomic(json_out, wmtrack::to_json(s).dump(2) + "\n");
  return 0;
}

int cmd_tune(double lower, double upper, double samples, double weakness) {
  const auto t = wmtrack::tune_parameters(lower, upper, samples, weakness);
  const auto reg = wmtrack::regime_report(t.model, t.tau / upper);
  std::printf("tau = %.17g\n", t.tau);
  std::printf("pbar = %.17g\n", t.model.pbar());
  std::printf("dp = %.17g\n", t.model.dp());
  std::printf("p0_plus = %.17g\n", t.model.p0_plus());
  std::printf("p1_plus = %.17g\n", t.model.p1_plus());
  std::printf("decoherence time = %.17g (%.6g upper Rabi periods, mode %s)\n", reg.t_d_tau * t.tau, reg.t_d_TR,
              wmtrack::to_string(reg.mode));
  return 0;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& r : wmtrack::run_selftest()) {
    std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    failed += r.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-measurement tracking of Rabi oscillations"};
  app.set_version_flag("--version", wmtrack::kToolVersion);
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Simulate one trajectory and write trajectory, metadata and summary files");
  run->add_option("--config", ro.config_path, "Config file of key = value lines");
  run->add_option("--pbar", ro.pbar, "Mean '+' probability");
  run->add_option("--dp", ro.dp, "Difference p1+ - p0+");
  run->add_option("--tau-over-tr", ro.tau_over_tr, "Time between measurements in Rabi periods");
  run->add_option("--cycles", ro.cycles, "Duration in Rabi periods");
  run->add_option("--n-max", ro.n_max, "Number of measurements");
  run->add_option("--seed", ro.seed, "Random seed");
  run->add_option("--precision-bits", ro.precision_bits, "MPFR precision, or 'auto'");
  run->add_option("--oracle-check-every", ro.oracle_check_every, "Compare against quadrature every k steps");
  run->add_option("--initial-state", ro.initial_state, "1, 0, +, - or bloch:THETA:PHASE");
  run->add_option("--format", ro.format, "csv or jsonl");
  run->add_option("--out", ro.out, "Trajectory path");
  run->add_option("--window-cycles", ro.window_cycles, "Analysis window for the summary")->check(CLI::Range(1.0, 1e9));

  std::string in, json_out;
  double window_cycles = 5.0;
  auto* analyze = app.add_subcommand("analyze", "Tracking error and sinusoid fits per window");
  analyze->add_option("--in", in, "Trajectory file (csv or jsonl)")->required();
  analyze->add_option("--window-cycles", window_cycles, "Window length in Rabi periods");
  analyze->add_option("--json", json_out, "Also write the analysis as JSON");

  double lower = 0.0, upper = 0.0, samples = 16.0, weakness = 12.5;
  auto* tune = app.add_subcommand("tune", "Pick tau and dp from bounds on the Rabi period");
  tune->add_option("--tr-lower", lower, "Lower bound on T_R")->required();
  tune->add_option("--tr-upper", upper, "Upper bound on T_R")->required();
  tune->add_option("--samples-per-period", samples, "Measurements per shortest period");
  tune->add_option("--weakness", weakness, "Decoherence time in units of the longest period");

  auto* selftest = app.add_subcommand("selftest", "Recursion vs quadrature and closed-form checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(ro);
    if (*analyze) return cmd_analyze(in, window_cycles, json_out);
    if (*tune) return cmd_tune(lower, upper, samples, weakness);
    if (*selftest) return cmd_selftest();
  } catch (const wmtrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const wmtrack::InvalidBounds& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const wmtrack::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const wmtrack::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const wmtrack::InsufficientData& e) {
    std::cerr << "analysis failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
