#ifndef WMTRACK_QCORE_HPP
#define WMTRACK_QCORE_HPP

// Qubit states, two-outcome weak measurements and the interaction-picture
// Rabi rotation. Everything here runs in machine double precision.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wmtrack/errors.hpp"

namespace wmtrack {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Dense 2x2 complex matrix, row-major: m[row][col] = <row|M|col>.
struct Matrix2 {
  std::array<std::array<Complex, 2>, 2> m{};

  static constexpr Matrix2 identity() { return Matrix2{{{{1.0, 0.0}, {0.0, 1.0}}}}; }
  static constexpr Matrix2 diagonal(Complex d0, Complex d1) {
    return Matrix2{{{{d0, 0.0}, {0.0, d1}}}};
  }

  constexpr Complex& operator()(int row, int col) { return m[row][col]; }
  constexpr const Complex& operator()(int row, int col) const { return m[row][col]; }

  Matrix2 adjoint() const {
    Matrix2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = std::conj(m[j][i]);
    return r;
  }

  Complex trace() const { return m[0][0] + m[1][1]; }

  /// Largest absolute entry.
  double max_abs() const {
    double r = 0.0;
    for (const auto& row : m)
      for (const auto& x : row) r = std::max(r, std::abs(x));
    return r;
  }

  friend Matrix2 operator*(const Matrix2& a, const Matrix2& b) {
    Matrix2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
    return r;
  }
  friend Matrix2 operator+(const Matrix2& a, const Matrix2& b) {
    Matrix2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] + b.m[i][j];
    return r;
  }
  friend Matrix2 operator-(const Matrix2& a, const Matrix2& b) {
    Matrix2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] - b.m[i][j];
    return r;
  }
  friend Matrix2 operator*(Complex s, const Matrix2& a) {
    Matrix2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = s * a.m[i][j];
    return r;
  }
};

/// Eigenvalues of a hermitian 2x2 matrix, ascending.
inline std::array<double, 2> hermitian_eigenvalues(const Matrix2& h) {
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), std::abs(h(0, 1)));
  return {mean - radius, mean + radius};
}

/// Pure qubit state c0|0> + c1|1>. Construction normalizes.
class QubitState {
 public:
  QubitState() : c0_(0.0), c1_(1.0) {}
  QubitState(Complex c0, Complex c1) : c0_(c0), c1_(c1) { normalize(); }

  static QubitState ground() { return {1.0, 0.0}; }
  static QubitState excited() { return {0.0, 1.0}; }
  /// cos(theta/2)|1> + e^{i phase} sin(theta/2)|0>; theta = 0 is |1>.
  static QubitState from_bloch(double theta, double phase) {
    return {std::polar(std::sin(0.5 * theta), phase), std::cos(0.5 * theta)};
  }

  Complex c0() const { return c0_; }
  Complex c1() const { return c1_; }
  double excited_population() const { return std::norm(c1_); }
  double norm_squared() const { return std::norm(c0_) + std::norm(c1_); }

 private:
  void normalize() {
    const double n = std::sqrt(norm_squared());
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("QubitState: zero or non-finite amplitude vector");
    c0_ /= n;
    c1_ /= n;
  }

  Complex c0_;
  Complex c1_;
};

enum class Outcome { minus = 0, plus = 1 };

inline const char* to_string(Outcome m) { return m == Outcome::plus ? "+" : "-"; }

/// Rotation angle phi = Omega_R * tau on the Bloch sphere, reduced into [0, 2pi).
class RotationAngle {
 public:
  constexpr RotationAngle() = default;
  explicit RotationAngle(double radians) : value_(std::fmod(radians, kTwoPi)) {
    if (value_ < 0.0) value_ += kTwoPi;
    if (value_ >= kTwoPi) value_ = 0.0;
  }
  /// phi = 2 pi tau / T_R.
  static RotationAngle from_sampling_ratio(double tau_over_period) { return RotationAngle(kTwoPi * tau_over_period); }

  constexpr double radians() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Two-outcome measurement with diagonal effects
///   N_m^dagger N_m = p0^m |0><0| + p1^m |1><1|,  p_j^+ + p_j^- = 1.
class MeasurementModel {
 public:
  MeasurementModel(double p0_plus, double p1_plus) : p0_plus_(p0_plus), p1_plus_(p1_plus) {
    check("p0_plus", p0_plus_);
    check("p1_plus", p1_plus_);
  }

  /// p0^+ = pbar - dp/2, p1^+ = pbar + dp/2.
  static MeasurementModel from_mean_difference(double pbar, double dp) {
    return {pbar - 0.5 * dp, pbar + 0.5 * dp};
  }

  double p0_plus() const { return p0_plus_; }
  double p1_plus() const { return p1_plus_; }
  double p0_minus() const { return 1.0 - p0_plus_; }
  double p1_minus() const { return 1.0 - p1_plus_; }
  double p0(Outcome m) const { return m == Outcome::plus ? p0_plus() : p0_minus(); }
  double p1(Outcome m) const { return m == Outcome::plus ? p1_plus() : p1_minus(); }
  double pbar() const { return 0.5 * (p0_plus_ + p1_plus_); }
  double dp() const { return p1_plus_ - p0_plus_; }

 private:
  static void check(const char* name, double p) {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument(std::string(name) + " = " + std::to_string(p) + " violates " + name + " in (0,1)");
  }

  double p0_plus_;
  double p1_plus_;
};

/// Kraus operator N with bounded positive effect N^dagger N <= 1.
class KrausOperator {
 public:
  static constexpr double kEffectTolerance = 1e-12;

  KrausOperator() : n_(Matrix2::identity()) {}
  explicit KrausOperator(const Matrix2& n) : n_(n) {
    for (const auto& row : n.m)
      for (const auto& x : row)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
          throw std::invalid_argument("KrausOperator: non-finite entry");
    const auto ev = hermitian_eigenvalues(n.adjoint() * n);
    if (ev[1] > 1.0 + kEffectTolerance)
      throw std::invalid_argument("KrausOperator: effect N^dagger N exceeds identity (largest eigenvalue " +
                                  std::to_string(ev[1]) + ")");
  }

  const Matrix2& matrix() const { return n_; }
  Complex operator()(int row, int col) const { return n_(row, col); }
  Matrix2 effect() const { return n_.adjoint() * n_; }

 private:
  Matrix2 n_;
};

/// exp(-i sigma_x phi / 2).
inline Matrix2 make_unitary(RotationAngle phi) {
  const double c = std::cos(0.5 * phi.radians());
  const double s = std::sin(0.5 * phi.radians());
  const Complex off(0.0, -s);
  return Matrix2{{{{c, off}, {off, c}}}};
}

/// Applies a matrix to a state without renormalizing.
inline std::array<Complex, 2> apply(const Matrix2& m, const QubitState& s) {
  return {m(0, 0) * s.c0() + m(0, 1) * s.c1(), m(1, 0) * s.c0() + m(1, 1) * s.c1()};
}

inline QubitState evolve(const QubitState& state, RotationAngle phi) {
  const auto v = apply(make_unitary(phi), state);
  return {v[0], v[1]};
}

/// diag(sqrt(p0^m), sqrt(p1^m)).
inline KrausOperator kraus_of(const MeasurementModel& model, Outcome m) {
  return KrausOperator(Matrix2::diagonal(std::sqrt(model.p0(m)), std::sqrt(model.p1(m))));
}

/// p(m|psi) = p0^m + (p1^m - p0^m) |c1|^2.
inline double outcome_probability(const QubitState& state, const MeasurementModel& model, Outcome m) {
  const double p = model.p0(m) + (model.p1(m) - model.p0(m)) * state.excited_population();
  return std::clamp(p, 0.0, 1.0);
}

/// Collapse floor below which an outcome counts as impossible.
inline constexpr double kProbabilityFloor = 1e-300;

/// N_m |psi> / sqrt(p(m|psi)), renormalized to absorb rounding drift.
inline QubitState apply_measurement(const QubitState& state, const KrausOperator& n) {
  const auto v = apply(n.matrix(), state);
  const double p = std::norm(v[0]) + std::norm(v[1]);
  if (!(p > kProbabilityFloor)) throw ZeroProbabilityOutcome("measurement outcome has zero probability for this state");
  return {v[0], v[1]};
}

inline QubitState apply_measurement(const QubitState& state, const MeasurementModel& model, Outcome m) {
  return apply_measurement(state, kraus_of(model, m));
}

}  // namespace wmtrack

#endif  // WMTRACK_QCORE_HPP
