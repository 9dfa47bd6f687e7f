#ifndef WMTRACK_ESTIMATOR_HPP
#define WMTRACK_ESTIMATOR_HPP

// Bayesian estimate of <A> after a record of weak measurements on a qubit
// rotating by an unknown angle phi per step (phi uniform on [0, 2pi), initial
// state Haar distributed).
//
// Two independent routes compute the same number:
//  * CoefficientTable + estimate_from_table: the M M^dagger polynomial in
//    cos(phi/2), sin(phi/2) is propagated coefficient by coefficient and the
//    phi integral is done in closed form with the b_{kl} weights. This is
//    O(n) per measurement, in MPFR arithmetic.
//  * estimate_oracle: direct periodic trapezoid quadrature over phi of
//    tr[M^dagger A M] and tr[M^dagger M] in double precision, O(n) per node.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmtrack/errors.hpp"
#include "wmtrack/mp_real.hpp"
#include "wmtrack/qcore.hpp"

namespace wmtrack {

inline constexpr mpfr_prec_t kDefaultPrecisionBits = 256;
inline constexpr mpfr_prec_t kMinPrecisionBits = 64;

/// Default precision, overridable through WMTRACK_PRECISION_BITS.
inline mpfr_prec_t default_precision_bits() {
  if (const char* env = std::getenv("WMTRACK_PRECISION_BITS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= kMinPrecisionBits && v <= (1L << 20)) return static_cast<mpfr_prec_t>(v);
  }
  return kDefaultPrecisionBits;
}

/// Hermitian 2x2 observable; defaults to the projector |1><1|.
class Observable {
 public:
  static constexpr double kHermitianTolerance = 1e-12;

  Observable() : a_(Matrix2::diagonal(0.0, 1.0)) {}
  explicit Observable(const Matrix2& a) : a_(a) {
    const Matrix2 d = a - a.adjoint();
    if (d.max_abs() > kHermitianTolerance * std::max(1.0, a.max_abs()))
      throw std::invalid_argument("Observable: matrix is not hermitian");
  }

  static Observable projector(int level) {
    return Observable(level == 0 ? Matrix2::diagonal(1.0, 0.0) : Matrix2::diagonal(0.0, 1.0));
  }
  static Observable diagonal(double a0, double a1) { return Observable(Matrix2::diagonal(a0, a1)); }

  const Matrix2& matrix() const { return a_; }
  bool is_diagonal() const { return a_(0, 1) == Complex{} && a_(1, 0) == Complex{}; }
  double trace() const { return a_.trace().real(); }

 private:
  Matrix2 a_;
};

/// Denominators below this count as zero.
inline constexpr double kDegenerateFloor = 1e-300;

/// g = tr[M^dagger A M] / tr[M^dagger M] for a single Kraus operator and a Haar prior.
inline double estimate_single(const KrausOperator& m, const Observable& a = Observable{}) {
  const Matrix2 md = m.matrix().adjoint();
  const double den = (md * m.matrix()).trace().real();
  if (!(den > kDegenerateFloor)) throw DegenerateOperator("estimate_single: tr[M^dagger M] vanishes");
  return (md * a.matrix() * m.matrix()).trace().real() / den;
}

/// Ordered Kraus operators of a measurement sequence, first measurement first.
using MeasurementRecord = std::vector<KrausOperator>;

inline MeasurementRecord make_record(const MeasurementModel& model, std::span<const Outcome> outcomes) {
  MeasurementRecord r;
  r.reserve(outcomes.size());
  for (Outcome m : outcomes) r.push_back(kraus_of(model, m));
  return r;
}

/// M = N_n U N_{n-1} U ... N_1 U with U = exp(-i sigma_x phi/2).
inline KrausOperator kraus_product(std::span<const KrausOperator> record, RotationAngle phi) {
  if (record.empty()) throw std::invalid_argument("kraus_product: empty record");
  const Matrix2 u = make_unitary(phi);
  Matrix2 m = Matrix2::identity();
  for (const auto& n : record) m = n.matrix() * (u * m);
  return KrausOperator(m);
}

/// Integration range for phi. The coefficient recursion supports only the full circle.
struct PhiRange {
  double lo = 0.0;
  double hi = kTwoPi;

  bool is_full() const { return lo == 0.0 && hi == kTwoPi; }
};

/// Quadrature reference for the sequence estimate. With the full range the
/// periodic trapezoid rule is exact for the degree n-1 trigonometric
/// polynomials in phi that appear here, so nodes >= n + 2 is exact up to
/// rounding; nodes == 0 selects 2n + 4. A restricted range falls back to the
/// composite trapezoid rule on [lo, hi] with `nodes` panels, which is not exact.
///
/// Each node carries its own power-of-two scale so records of thousands of
/// measurements do not underflow.
inline double estimate_oracle(std::span<const KrausOperator> record, const Observable& a = Observable{},
                              std::size_t nodes = 0, PhiRange range = {}) {
  const std::size_t n = record.size();
  if (n == 0) return 0.5 * a.trace();
  if (nodes == 0) nodes = 2 * n + 4;
  if (nodes < n + 2)
    throw std::invalid_argument("estimate_oracle: need at least n + 2 = " + std::to_string(n + 2) + " nodes");
  if (!(range.lo >= 0.0 && range.hi <= kTwoPi && range.lo < range.hi))
    throw std::invalid_argument("estimate_oracle: phi range must be a non-empty sub-interval of [0, 2pi]");

  const bool periodic = range.is_full();
  const std::size_t points = periodic ? nodes : nodes + 1;
  const double h = (range.hi - range.lo) / static_cast<double>(nodes);

  std::vector<double> num(points), den(points);
  std::vector<long> exponent(points);
  for (std::size_t i = 0; i < points; ++i) {
    // phi is used unreduced: make_unitary only needs cos/sin of phi/2.
    const double phi = range.lo + h * static_cast<double>(i);
    const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
    const Matrix2 u{{{{c, Complex(0.0, -s)}, {Complex(0.0, -s), c}}}};
    Matrix2 m = Matrix2::identity();
    long e = 0;
    for (const auto& k : record) {
      m = k.matrix() * (u * m);
      const double mx = m.max_abs();
      if (mx == 0.0) break;
      int ex = 0;
      std::frexp(mx, &ex);
      m = Complex(std::ldexp(1.0, -ex)) * m;
      e += ex;
    }
    const Matrix2 md = m.adjoint();
    num[i] = (md * a.matrix() * m).trace().real();
    den[i] = (md * m).trace().real();
    exponent[i] = e;
    if (den[i] == 0.0) exponent[i] = std::numeric_limits<long>::min();
  }

  const long emax = *std::max_element(exponent.begin(), exponent.end());
  if (emax == std::numeric_limits<long>::min()) throw DegenerateRecord("estimate_oracle: record has zero likelihood");
  double snum = 0.0, sden = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    if (exponent[i] == std::numeric_limits<long>::min()) continue;
    const long shift = 2 * (exponent[i] - emax);
    if (shift < -2000) continue;
    double w = std::ldexp(1.0, static_cast<int>(shift));
    if (!periodic && (i == 0 || i + 1 == points)) w *= 0.5;
    snum += w * num[i];
    sden += w * den[i];
  }
  if (!(sden > kDegenerateFloor)) throw DegenerateRecord("estimate_oracle: normalisation integral vanishes");
  return snum / sden;
}

/// b_{kl} = 2 Gamma(k+1/2) Gamma(l+1/2) / (k+l)!  =  int_0^{2pi} cos^{2k}(phi/2) sin^{2l}(phi/2) dphi.
///
/// Gamma(k+1/2) comes from Gamma(1/2) = sqrt(pi) by Gamma(x+1) = x Gamma(x);
/// 1/k! is accumulated incrementally. Both tables grow on demand.
class BWeights {
 public:
  explicit BWeights(mpfr_prec_t bits = kDefaultPrecisionBits) : bits_(bits) {
    mp::Real g(bits_);
    mpfr_const_pi(g.get(), mp::kRound);
    mpfr_sqrt(g.get(), g.get(), mp::kRound);
    gamma_half_.push_back(std::move(g));
    inv_factorial_.emplace_back(1.0, bits_);
  }

  mpfr_prec_t precision() const { return bits_; }

  /// Grows the caches so that weight(k, l) is available for k + l <= total.
  void reserve(std::size_t total) {
    while (gamma_half_.size() <= total) {
      const std::size_t k = gamma_half_.size();
      mp::Real g(gamma_half_.back());
      mpfr_mul_ui(g.get(), g.get(), 2 * k - 1, mp::kRound);  // Gamma(k+1/2) = (k-1/2) Gamma(k-1/2)
      mpfr_div_2ui(g.get(), g.get(), 1, mp::kRound);
      gamma_half_.push_back(std::move(g));
    }
    while (inv_factorial_.size() <= total) {
      const std::size_t k = inv_factorial_.size();
      mp::Real f(inv_factorial_.back());
      mpfr_div_ui(f.get(), f.get(), k, mp::kRound);
      inv_factorial_.push_back(std::move(f));
    }
  }

  const mp::Real& gamma_half(std::size_t k) {
    reserve(k);
    return gamma_half_[k];
  }

  /// Writes b_{kl} into `out` (which keeps its own precision).
  void weight(std::size_t k, std::size_t l, mp::Real& out) {
    reserve(k + l);
    mpfr_mul(out.get(), gamma_half_[k].get(), gamma_half_[l].get(), mp::kRound);
    mpfr_mul(out.get(), out.get(), inv_factorial_[k + l].get(), mp::kRound);
    mpfr_mul_2ui(out.get(), out.get(), 1, mp::kRound);
  }

  mp::Real weight(std::size_t k, std::size_t l) {
    mp::Real out(bits_);
    weight(k, l, out);
    return out;
  }

  /// The anti-diagonal b_{k, total-k} for k = 0..total. Consecutive calls with
  /// total, total+1, ... advance the cached row in O(total) cheap operations
  /// using b_{k,l+1} = b_{kl} (l + 1/2) / (k + l + 1); any other request
  /// rebuilds it from the Gamma tables.
  const std::vector<mp::Real>& row(std::size_t total) {
    if (row_valid_ && row_total_ == total) return row_;
    if (row_valid_ && row_total_ + 1 == total) {
      const std::size_t t = total;
      for (std::size_t k = 0; k < t; ++k) {
        mpfr_mul_ui(row_[k].get(), row_[k].get(), 2 * (t - k) - 1, mp::kRound);
        mpfr_div_ui(row_[k].get(), row_[k].get(), 2 * t, mp::kRound);
      }
      row_.emplace_back(bits_);
      weight(t, 0, row_.back());
    } else {
      row_.clear();
      for (std::size_t k = 0; k <= total; ++k) {
        row_.emplace_back(bits_);
        weight(k, total - k, row_.back());
      }
    }
    row_total_ = total;
    row_valid_ = true;
    return row_;
  }

 private:
  mpfr_prec_t bits_;
  std::vector<mp::Real> gamma_half_;
  std::vector<mp::Real> inv_factorial_;
  std::vector<mp::Real> row_;
  std::size_t row_total_ = 0;
  bool row_valid_ = false;
};

inline mp::Real b_weight(std::size_t k, std::size_t l, mpfr_prec_t bits = kDefaultPrecisionBits) {
  return BWeights(bits).weight(k, l);
}

/// Coefficients a_{jlk}^{(n)} of
///   M M^dagger = sum_k a_{..k} cos^k(phi/2) sin^{2n-2-k}(phi/2),
/// k in [0, 2n-2], after n measurements. Entries are stored divided by
/// 2^log2_scale(); the estimate is a ratio and ignores the scale.
///
/// One step is a^{(n)}_{jl}(k) = sum_pq N_jp conj(N_lq) Y_pq(k) with
///   Y_pq(k) = a_pq(k-2) + i (a_{1-p,q} - a_{p,1-q})(k-1) + a_{1-p,1-q}(k),
/// each term present only where its shifted index is a valid slot of the
/// previous table. Y is the rotation U X U^dagger expanded in cos/sin(phi/2);
/// the sign of the middle term corresponds to U(-phi), which leaves every even
/// power of sin(phi/2), and hence the estimate, unchanged.
class CoefficientTable {
 public:
  explicit CoefficientTable(mpfr_prec_t bits = kDefaultPrecisionBits) : bits_(bits) {
    if (bits_ < kMinPrecisionBits)
      throw std::invalid_argument("CoefficientTable: precision below " + std::to_string(kMinPrecisionBits) + " bits");
    resize(cur_, 1);
  }

  std::size_t steps() const { return n_; }
  /// Number of k slots: 2n - 1, or 1 (all zero) before the first measurement.
  std::size_t size() const { return n_ == 0 ? 1 : 2 * n_ - 1; }
  mpfr_prec_t precision() const { return bits_; }
  /// Binary exponent of the common factor removed from the stored entries.
  std::int64_t log2_scale() const { return log2_scale_; }
  /// Natural-log form of log2_scale().
  double log_scale() const { return static_cast<double>(log2_scale_) * std::numbers::ln2; }

  const mp::ComplexReal& coefficient(int j, int l, std::size_t k) const { return cur_[entry(j, l)][k]; }

  /// Advances the table by one measurement with Kraus operator `n`, then
  /// rescales by a power of two so that the largest entry lies in [1/2, 1).
  void update(const KrausOperator& n) {
    if (n_ == 0) {
      // a_{jl0}^{(1)} = sum_p N_jp conj(N_lp)
      resize(next_, 1);
      mp::ComplexReal t(bits_);
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l)
          for (int p = 0; p < 2; ++p) {
            mul_conj(n(j, p), n(l, p), t);
            add(next_[entry(j, l)][0], t);
          }
    } else {
      const std::size_t prev = size();
      resize(next_, prev + 2);
      if (n(0, 1) == Complex{} && n(1, 0) == Complex{})
        update_diagonal(n, prev);
      else
        update_general(n, prev);
    }
    std::swap(cur_, next_);
    ++n_;
    rescale();
  }

  /// Multiplies every entry by c > 0 (log2_scale is left alone).
  void scale_by(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("CoefficientTable::scale_by: factor must be positive");
    for (auto& v : cur_)
      for (auto& x : v) {
        mpfr_mul_d(x.re.get(), x.re.get(), c, mp::kRound);
        mpfr_mul_d(x.im.get(), x.im.get(), c, mp::kRound);
      }
  }

  /// max_k |a_{jlk} - conj(a_{ljk})| relative to the largest entry, which
  /// rescaling keeps in [1/2, 1).
  double hermitian_defect() const {
    mp::Real d(bits_), best(bits_);
    auto keep = [&] {
      mpfr_abs(d.get(), d.get(), mp::kRound);
      if (mpfr_greater_p(d.get(), best.get())) mpfr_set(best.get(), d.get(), mp::kRound);
    };
    for (std::size_t k = 0; k < size(); ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = j; l < 2; ++l) {
          const auto& x = cur_[entry(j, l)][k];
          const auto& y = cur_[entry(l, j)][k];
          mpfr_sub(d.get(), x.re.get(), y.re.get(), mp::kRound);
          keep();
          mpfr_add(d.get(), x.im.get(), y.im.get(), mp::kRound);
          keep();
        }
    return best.to_double();
  }

 private:
  using Slots = std::array<std::vector<mp::ComplexReal>, 4>;

  static int entry(int j, int l) { return 2 * j + l; }

  void resize(Slots& t, std::size_t slots) const {
    for (auto& v : t) {
      while (v.size() < slots) v.emplace_back(bits_);
      v.resize(slots, mp::ComplexReal(bits_));
      for (auto& x : v) x.set_zero();
    }
  }

  // acc += x and acc -= x, skipping exact zeros (half of all entries vanish for
  // the standard diagonal model).
  static void acc_add(mpfr_ptr acc, mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return;
    if (mpfr_zero_p(acc))
      mpfr_set(acc, x, mp::kRound);
    else
      mpfr_add(acc, acc, x, mp::kRound);
  }
  static void acc_sub(mpfr_ptr acc, mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return;
    if (mpfr_zero_p(acc))
      mpfr_neg(acc, x, mp::kRound);
    else
      mpfr_sub(acc, acc, x, mp::kRound);
  }

  /// out = Y_pq(k) from the current (previous-step) table of `prev` slots.
  void rotated(int p, int q, std::size_t k, std::size_t prev, mp::ComplexReal& out) const {
    out.set_zero();
    if (k >= 2) {
      const auto& a = cur_[entry(p, q)][k - 2];
      acc_add(out.re.get(), a.re.get());
      acc_add(out.im.get(), a.im.get());
    }
    if (k >= 1 && k - 1 < prev) {
      // i (x - y) = (y.im - x.im) + i (x.re - y.re)
      const auto& x = cur_[entry(1 - p, q)][k - 1];
      const auto& y = cur_[entry(p, 1 - q)][k - 1];
      acc_sub(out.re.get(), x.im.get());
      acc_add(out.re.get(), y.im.get());
      acc_add(out.im.get(), x.re.get());
      acc_sub(out.im.get(), y.re.get());
    }
    if (k < prev) {
      const auto& a = cur_[entry(1 - p, 1 - q)][k];
      acc_add(out.re.get(), a.re.get());
      acc_add(out.im.get(), a.im.get());
    }
  }

  void set(mp::ComplexReal& out, Complex z) const {
    mpfr_set_d(out.re.get(), z.real(), mp::kRound);
    mpfr_set_d(out.im.get(), z.imag(), mp::kRound);
  }

  /// out = x * conj(y), carried out in working precision.
  void mul_conj(Complex x, Complex y, mp::ComplexReal& out) const {
    mp::ComplexReal a(bits_), b(bits_);
    set(a, x);
    set(b, std::conj(y));
    mpfr_fmms(out.re.get(), a.re.get(), b.re.get(), a.im.get(), b.im.get(), mp::kRound);
    mpfr_fmma(out.im.get(), a.re.get(), b.im.get(), a.im.get(), b.re.get(), mp::kRound);
  }

  static void add(mp::ComplexReal& acc, const mp::ComplexReal& x) {
    mpfr_add(acc.re.get(), acc.re.get(), x.re.get(), mp::kRound);
    mpfr_add(acc.im.get(), acc.im.get(), x.im.get(), mp::kRound);
  }

  /// z *= c in place; `tmp` is scratch.
  static void mul_in_place(mp::ComplexReal& z, const mp::ComplexReal& c, mp::Real& tmp) {
    if (z.is_zero()) return;
    if (c.im.is_zero()) {
      if (!z.re.is_zero()) mpfr_mul(z.re.get(), z.re.get(), c.re.get(), mp::kRound);
      if (!z.im.is_zero()) mpfr_mul(z.im.get(), z.im.get(), c.re.get(), mp::kRound);
    } else if (c.re.is_zero()) {
      // (x + iy) (i c) = -c y + i c x
      mpfr_swap(z.re.get(), z.im.get());
      if (!z.re.is_zero()) {
        mpfr_mul(z.re.get(), z.re.get(), c.im.get(), mp::kRound);
        mpfr_neg(z.re.get(), z.re.get(), mp::kRound);
      }
      if (!z.im.is_zero()) mpfr_mul(z.im.get(), z.im.get(), c.im.get(), mp::kRound);
    } else {
      mpfr_fmms(tmp.get(), z.re.get(), c.re.get(), z.im.get(), c.im.get(), mp::kRound);
      mpfr_fmma(z.im.get(), z.re.get(), c.im.get(), z.im.get(), c.re.get(), mp::kRound);
      mpfr_swap(z.re.get(), tmp.get());
    }
  }

  /// N diagonal: a_jl(k) = N_jj conj(N_ll) Y_jl(k).
  void update_diagonal(const KrausOperator& n, std::size_t prev) {
    std::array<mp::ComplexReal, 4> d{mp::ComplexReal(bits_), mp::ComplexReal(bits_), mp::ComplexReal(bits_),
                                     mp::ComplexReal(bits_)};
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) mul_conj(n(j, j), n(l, l), d[entry(j, l)]);
    mp::Real tmp(bits_);
    for (std::size_t k = 0; k < prev + 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
          auto& o = next_[entry(j, l)][k];
          rotated(j, l, k, prev, o);
          mul_in_place(o, d[entry(j, l)], tmp);
        }
  }

  /// General N: a(k) = N Y(k) N^dagger, coefficient by coefficient.
  void update_general(const KrausOperator& n, std::size_t prev) {
    std::vector<mp::ComplexReal> coef;  // coef[4*out + in] = N_jp conj(N_lq)
    coef.reserve(16);
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l)
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) {
            coef.emplace_back(bits_);
            mul_conj(n(j, p), n(l, q), coef.back());
          }
    std::array<mp::ComplexReal, 4> y{mp::ComplexReal(bits_), mp::ComplexReal(bits_), mp::ComplexReal(bits_),
                                     mp::ComplexReal(bits_)};
    mp::ComplexReal t(bits_);
    mp::Real tmp(bits_);
    for (std::size_t k = 0; k < prev + 2; ++k) {
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) rotated(p, q, k, prev, y[entry(p, q)]);
      for (int out = 0; out < 4; ++out) {
        auto& o = next_[out][k];
        for (int in = 0; in < 4; ++in) {
          if (y[in].is_zero() || coef[4 * out + in].is_zero()) continue;
          mpfr_set(t.re.get(), y[in].re.get(), mp::kRound);
          mpfr_set(t.im.get(), y[in].im.get(), mp::kRound);
          mul_in_place(t, coef[4 * out + in], tmp);
          add(o, t);
        }
      }
    }
  }

  void rescale() {
    mpfr_exp_t emax = 0;
    bool any = false;
    for (const auto& v : cur_)
      for (const auto& x : v)
        for (const mp::Real* r : {&x.re, &x.im})
          if (!r->is_zero()) {
            emax = any ? std::max(emax, r->exponent()) : r->exponent();
            any = true;
          }
    if (!any) throw DegenerateRecord("CoefficientTable: record has zero likelihood");
    if (emax == 0) return;
    for (auto& v : cur_)
      for (auto& x : v) {
        mpfr_div_2si(x.re.get(), x.re.get(), emax, mp::kRound);
        mpfr_div_2si(x.im.get(), x.im.get(), emax, mp::kRound);
      }
    log2_scale_ += emax;
  }

  mpfr_prec_t bits_;
  std::size_t n_ = 0;
  std::int64_t log2_scale_ = 0;
  Slots cur_;
  Slots next_;
};

/// Functional form of CoefficientTable::update.
inline CoefficientTable table_update(CoefficientTable table, const KrausOperator& n) {
  table.update(n);
  return table;
}

/// Result of the closed-form phi integral with its conditioning.
struct TableEstimate {
  double value = 0.5;
  /// Approximate bits lost to cancellation in F_00 + F_11: the exponent of the
  /// largest term a_{jj,2k} b_{k,n-1-k} minus the exponent of the sum.
  long cancellation_bits = 0;
};

/// Precision that must survive the cancellation for an estimate to be trusted.
inline constexpr long kRequiredSignificantBits = 64;

/// g = (a0 F00 + a1 F11) / (F00 + F11),  F_jj = sum_{k<n} a_{jj,2k} b_{k,n-1-k},
/// for diagonal A = a0|0><0| + a1|1><1|. Returns tr A / 2 before any measurement.
///
/// The sum cancels heavily, about one bit per measurement. PrecisionExhausted
/// is raised once fewer than kRequiredSignificantBits bits survive.
inline TableEstimate estimate_from_table_detailed(const CoefficientTable& table, const Observable& a,
                                                  BWeights& weights) {
  if (!a.is_diagonal()) throw std::invalid_argument("estimate_from_table: observable must be diagonal");
  if (weights.precision() != table.precision())
    throw std::invalid_argument("estimate_from_table: weight and table precision differ");
  const std::size_t n = table.steps();
  if (n == 0) return {0.5 * a.trace(), 0};

  const mpfr_prec_t bits = table.precision();
  const auto& b = weights.row(n - 1);
  mp::Real term(bits), f0(bits), f1(bits);
  long top = std::numeric_limits<long>::min();
  for (std::size_t k = 0; k < n; ++k) {
    const mp::Real& bk = b[k];
    for (int j = 0; j < 2; ++j) {
      const mp::Real& x = table.coefficient(j, j, 2 * k).re;
      if (x.is_zero()) continue;
      mpfr_mul(term.get(), x.get(), bk.get(), mp::kRound);
      mp::Real& f = j == 0 ? f0 : f1;
      mpfr_add(f.get(), f.get(), term.get(), mp::kRound);
      top = std::max(top, static_cast<long>(term.exponent()));
    }
  }

  mp::Real den(bits), num(bits);
  mpfr_add(den.get(), f0.get(), f1.get(), mp::kRound);
  if (mpfr_sgn(den.get()) <= 0) throw DegenerateRecord("estimate_from_table: F00 + F11 vanishes");
  const long lost = std::max(0L, top - static_cast<long>(den.exponent()));
  if (lost > static_cast<long>(bits) - kRequiredSignificantBits)
    throw PrecisionExhausted("estimate_from_table: " + std::to_string(lost) + " of " + std::to_string(bits) +
                             " bits lost to cancellation after " + std::to_string(n) +
                             " measurements; raise the precision to at least " +
                             std::to_string(n + 2 * kRequiredSignificantBits) + " bits");

  mpfr_mul_d(num.get(), f0.get(), a.matrix()(0, 0).real(), mp::kRound);
  mpfr_mul_d(term.get(), f1.get(), a.matrix()(1, 1).real(), mp::kRound);
  mpfr_add(num.get(), num.get(), term.get(), mp::kRound);
  mpfr_div(num.get(), num.get(), den.get(), mp::kRound);
  return {num.to_double(), lost};
}

inline double estimate_from_table(const CoefficientTable& table, const Observable& a, BWeights& weights) {
  return estimate_from_table_detailed(table, a, weights).value;
}

inline double estimate_from_table(const CoefficientTable& table, const Observable& a = Observable{}) {
  BWeights weights(table.precision());
  return estimate_from_table(table, a, weights);
}

/// Precision that keeps kRequiredSignificantBits after `steps` measurements,
/// rounded up to whole 64-bit limbs.
inline mpfr_prec_t precision_for_steps(std::size_t steps) {
  const std::size_t bits = steps + 2 * static_cast<std::size_t>(kRequiredSignificantBits);
  return static_cast<mpfr_prec_t>(std::max<std::size_t>(kDefaultPrecisionBits, (bits + 63) / 64 * 64));
}

}  // namespace wmtrack

#endif  // WMTRACK_ESTIMATOR_HPP
