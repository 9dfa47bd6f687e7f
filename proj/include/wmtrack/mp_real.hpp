#ifndef WMTRACK_MP_REAL_HPP
#define WMTRACK_MP_REAL_HPP

// Minimal owning wrapper around an MPFR number. The hot loops call the MPFR
// C API directly on get(); this class only manages lifetime and precision.

#include <mpfr.h>

#include <cstdint>
#include <utility>

namespace wmtrack::mp {

inline constexpr mpfr_rnd_t kRound = MPFR_RNDN;

class Real {
 public:
  explicit Real(mpfr_prec_t bits = 256) {
    mpfr_init2(v_, bits);
    mpfr_set_zero(v_, 1);
  }
  Real(double x, mpfr_prec_t bits) {
    mpfr_init2(v_, bits);
    mpfr_set_d(v_, x, kRound);
  }
  Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, kRound);
  }
  Real(Real&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, kRound);
    }
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

  double to_double() const { return mpfr_get_d(v_, kRound); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  /// Binary exponent e with 0.5 <= |x| / 2^e < 1. Only meaningful for nonzero values.
  mpfr_exp_t exponent() const { return mpfr_get_exp(v_); }

 private:
  mpfr_t v_;
};

struct ComplexReal {
  Real re;
  Real im;

  explicit ComplexReal(mpfr_prec_t bits = 256) : re(bits), im(bits) {}

  void set_zero() {
    mpfr_set_zero(re.get(), 1);
    mpfr_set_zero(im.get(), 1);
  }
  bool is_zero() const { return re.is_zero() && im.is_zero(); }
};

}  // namespace wmtrack::mp

#endif  // WMTRACK_MP_REAL_HPP
