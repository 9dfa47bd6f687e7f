#ifndef WMTRACK_SELFTEST_HPP
#define WMTRACK_SELFTEST_HPP

// Quick built-in checks: recursion against quadrature on random records, and
// the closed forms. Used by `wmtrack selftest`.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "wmtrack/estimator.hpp"
#include "wmtrack/qcore.hpp"
#include "wmtrack/trajectory.hpp"

namespace wmtrack {

/// Random Kraus operator with largest singular value in [0.3, 1). Diagonal
/// operators get real non-negative entries, like the measurement model's.
inline KrausOperator random_kraus(std::mt19937_64& rng, bool diagonal) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> target(0.3, 0.999);
  Matrix2 m;
  if (diagonal) {
    m = Matrix2::diagonal(std::abs(u(rng)) + 0.05, std::abs(u(rng)) + 0.05);
  } else {
    for (auto& row : m.m)
      for (auto& x : row) x = Complex(u(rng), u(rng));
  }
  const double smax = std::sqrt(hermitian_eigenvalues(m.adjoint() * m)[1]);
  return KrausOperator((target(rng) / smax) * m);
}

inline MeasurementRecord random_record(std::mt19937_64& rng, std::size_t length, bool diagonal) {
  MeasurementRecord r;
  r.reserve(length);
  for (std::size_t i = 0; i < length; ++i) r.push_back(random_kraus(rng, diagonal));
  return r;
}

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline double table_estimate(const MeasurementRecord& record, const Observable& a, mpfr_prec_t bits) {
  CoefficientTable table(bits);
  for (const auto& n : record) table.update(n);
  BWeights w(bits);
  return estimate_from_table(table, a, w);
}

inline std::vector<SelfTestResult> run_selftest(std::uint64_t seed = 20240601) {
  std::vector<SelfTestResult> out;
  char buf[160];
  std::mt19937_64 rng(seed);

  {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      const auto rec = random_record(rng, 1 + i % 20, i % 2 == 0);
      worst = std::max(worst, std::abs(table_estimate(rec, Observable{}, kDefaultPrecisionBits) - estimate_oracle(rec)));
    }
    std::snprintf(buf, sizeof buf, "max |recursion - quadrature| = %.3g over 40 records", worst);
    out.push_back({"oracle equivalence", worst <= 1e-10, buf});
  }
  {
    CoefficientTable empty(kDefaultPrecisionBits);
    const double g = estimate_from_table(empty);
    std::snprintf(buf, sizeof buf, "g = %.17g", g);
    out.push_back({"empty record gives 1/2", g == 0.5, buf});
  }
  {
    const MeasurementModel model(0.2, 0.7);
    const Outcome plus = Outcome::plus;
    const auto rec = make_record(model, std::span(&plus, 1));
    const double g = table_estimate(rec, Observable{}, kDefaultPrecisionBits);
    const double expect = 0.7 / 0.9;
    std::snprintf(buf, sizeof buf, "g = %.17g, expected %.17g", g, expect);
    out.push_back({"single diagonal measurement", std::abs(g - expect) <= 1e-12, buf});
  }
  {
    const double f = coherence_decay_factor(0.5, 0.1);
    const double td = -1.0 / std::log(f);
    std::snprintf(buf, sizeof buf, "-tau/ln f = %.6f tau vs %.1f tau", td, decoherence_time(0.5, 0.1, 1.0));
    out.push_back({"decoherence time", std::abs(td / 200.0 - 1.0) <= 0.01, buf});
  }
  {
    const double b = b_weight(0, 0).to_double();
    std::snprintf(buf, sizeof buf, "b_00 = %.17g", b);
    out.push_back({"beta weight b_00 = 2 pi", std::abs(b - kTwoPi) <= 1e-14, buf});
  }
  return out;
}

}  // namespace wmtrack

#endif  // WMTRACK_SELFTEST_HPP
