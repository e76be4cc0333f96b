#include "impvol/xreal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

namespace impvol {

namespace {

int checked_bits(int bits) {
  if (bits < kMinPrecisionBits) {
    throw DomainError("precision_bits must be >= 64, got " + std::to_string(bits));
  }
  return bits;
}

mpfr_prec_t max_prec(mpfr_srcptr a, mpfr_srcptr b) {
  return std::max(mpfr_get_prec(a), mpfr_get_prec(b));
}

}  // namespace

XReal::XReal(Uninit, int bits) { mpfr_init2(v_, checked_bits(bits)); }

XReal::XReal() : XReal(0L, kMinPrecisionBits) {}

XReal::XReal(long value, int bits) : XReal(Uninit{}, bits) { mpfr_set_si(v_, value, MPFR_RNDN); }

XReal::XReal(double value, int bits) : XReal(Uninit{}, bits) {
  if (!std::isfinite(value)) throw NumericalError("non-finite double passed to XReal");
  mpfr_set_d(v_, value, MPFR_RNDN);
}

XReal::XReal(const XReal& other) : XReal(Uninit{}, other.precision_bits()) {
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

XReal::XReal(const XReal& other, int bits) : XReal(Uninit{}, bits) {
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

XReal::XReal(XReal&& other) noexcept {
  *v_ = *other.v_;
  other.v_->_mpfr_d = nullptr;
}

XReal& XReal::operator=(const XReal& other) {
  if (this == &other) return *this;
  if (v_->_mpfr_d == nullptr) {
    mpfr_init2(v_, mpfr_get_prec(other.v_));
  } else if (mpfr_get_prec(v_) != mpfr_get_prec(other.v_)) {
    mpfr_set_prec(v_, mpfr_get_prec(other.v_));
  }
  mpfr_set(v_, other.v_, MPFR_RNDN);
  return *this;
}

XReal& XReal::operator=(XReal&& other) noexcept {
  std::swap(*v_, *other.v_);
  return *this;
}

XReal::~XReal() {
  if (v_->_mpfr_d != nullptr) mpfr_clear(v_);
}

void XReal::check(const char* op) const {
  if (mpfr_number_p(v_) == 0) {
    throw NumericalError(std::string("non-finite result in ") + op);
  }
}

XReal XReal::from_string(std::string_view text, int bits) {
  XReal r(Uninit{}, bits);
  std::string buf(text);
  char* end = nullptr;
  mpfr_strtofr(r.v_, buf.c_str(), &end, 10, MPFR_RNDN);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw DomainError("not a decimal number: '" + buf + "'");
  }
  r.check("from_string");
  return r;
}

XReal XReal::pi(int bits) {
  XReal r(Uninit{}, bits);
  mpfr_const_pi(r.v_, MPFR_RNDN);
  return r;
}

XReal XReal::e(int bits) {
  XReal r(1L, bits);
  mpfr_exp(r.v_, r.v_, MPFR_RNDN);
  return r;
}

XReal XReal::pow2(long exponent, int bits) {
  XReal r(1L, bits);
  mpfr_mul_2si(r.v_, r.v_, exponent, MPFR_RNDN);
  r.check("pow2");
  return r;
}

XReal XReal::from_mpq(mpq_srcptr q, int bits) {
  XReal r(0L, bits);
  mpfr_set_q(r.v_, q, MPFR_RNDN);
  r.check("from_mpq");
  return r;
}

std::string XReal::to_string(int digits) const {
  if (is_zero()) return "0";
  const auto prec = mpfr_get_prec(v_);
  const std::size_t n = digits > 0 ? static_cast<std::size_t>(digits)
                                   : static_cast<std::size_t>(std::ceil(static_cast<double>(prec) * 0.30102999566398120)) + 1;
  mpfr_exp_t e10 = 0;
  char* raw = mpfr_get_str(nullptr, &e10, 10, n, v_, MPFR_RNDN);
  std::string mant(raw);
  mpfr_free_str(raw);
  std::string out;
  if (mant.front() == '-') {
    out.push_back('-');
    mant.erase(0, 1);
  }
  while (mant.size() > 1 && mant.back() == '0') mant.pop_back();
  out.push_back(mant[0]);
  out.push_back('.');
  out += mant.size() > 1 ? mant.substr(1) : std::string("0");
  out += 'e';
  out += std::to_string(static_cast<long>(e10) - 1);
  return out;
}

XReal& XReal::operator+=(const XReal& rhs) {
  if (mpfr_get_prec(rhs.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(rhs.v_), MPFR_RNDN);
  mpfr_add(v_, v_, rhs.v_, MPFR_RNDN);
  check("+");
  return *this;
}

XReal& XReal::operator-=(const XReal& rhs) {
  if (mpfr_get_prec(rhs.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(rhs.v_), MPFR_RNDN);
  mpfr_sub(v_, v_, rhs.v_, MPFR_RNDN);
  check("-");
  return *this;
}

XReal& XReal::operator*=(const XReal& rhs) {
  if (mpfr_get_prec(rhs.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(rhs.v_), MPFR_RNDN);
  mpfr_mul(v_, v_, rhs.v_, MPFR_RNDN);
  check("*");
  return *this;
}

XReal& XReal::operator/=(const XReal& rhs) {
  if (mpfr_get_prec(rhs.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(rhs.v_), MPFR_RNDN);
  mpfr_div(v_, v_, rhs.v_, MPFR_RNDN);
  check("/");
  return *this;
}

XReal& XReal::operator*=(long rhs) {
  mpfr_mul_si(v_, v_, rhs, MPFR_RNDN);
  check("*");
  return *this;
}

XReal& XReal::operator/=(long rhs) {
  mpfr_div_si(v_, v_, rhs, MPFR_RNDN);
  check("/");
  return *this;
}

XReal& XReal::fma_add(const XReal& a, const XReal& b) {
  const auto p = std::max(mpfr_get_prec(v_), max_prec(a.v_, b.v_));
  if (p > mpfr_get_prec(v_)) mpfr_prec_round(v_, p, MPFR_RNDN);
  mpfr_fma(v_, a.v_, b.v_, v_, MPFR_RNDN);
  check("fma");
  return *this;
}

XReal& XReal::fms_sub(const XReal& a, const XReal& b) {
  const auto p = std::max(mpfr_get_prec(v_), max_prec(a.v_, b.v_));
  if (p > mpfr_get_prec(v_)) mpfr_prec_round(v_, p, MPFR_RNDN);
  // v - a*b = -(a*b - v)
  mpfr_fms(v_, a.v_, b.v_, v_, MPFR_RNDN);
  mpfr_neg(v_, v_, MPFR_RNDN);
  check("fms");
  return *this;
}

XReal XReal::operator-() const {
  XReal r(*this);
  mpfr_neg(r.v_, r.v_, MPFR_RNDN);
  return r;
}

#define IMPVOL_BINARY(op, fn)                                        \
  XReal operator op(const XReal& a, const XReal& b) {                \
    XReal r(XReal::Uninit{}, static_cast<int>(max_prec(a.v_, b.v_))); \
    fn(r.v_, a.v_, b.v_, MPFR_RNDN);                                  \
    r.check(#op);                                                     \
    return r;                                                         \
  }

IMPVOL_BINARY(+, mpfr_add)
IMPVOL_BINARY(-, mpfr_sub)
IMPVOL_BINARY(*, mpfr_mul)
IMPVOL_BINARY(/, mpfr_div)
#undef IMPVOL_BINARY

#define IMPVOL_BINARY_SI(op, fn)                         \
  XReal operator op(const XReal& a, long b) {            \
    XReal r(XReal::Uninit{}, a.precision_bits());        \
    fn(r.v_, a.v_, b, MPFR_RNDN);                         \
    r.check(#op);                                         \
    return r;                                             \
  }

IMPVOL_BINARY_SI(+, mpfr_add_si)
IMPVOL_BINARY_SI(-, mpfr_sub_si)
IMPVOL_BINARY_SI(*, mpfr_mul_si)
IMPVOL_BINARY_SI(/, mpfr_div_si)
#undef IMPVOL_BINARY_SI

XReal operator-(long a, const XReal& b) {
  XReal r(XReal::Uninit{}, b.precision_bits());
  mpfr_si_sub(r.v_, a, b.v_, MPFR_RNDN);
  r.check("-");
  return r;
}

XReal operator/(long a, const XReal& b) {
  XReal r(XReal::Uninit{}, b.precision_bits());
  mpfr_si_div(r.v_, a, b.v_, MPFR_RNDN);
  r.check("/");
  return r;
}

std::partial_ordering operator<=>(const XReal& a, const XReal& b) {
  const int c = mpfr_cmp(a.v_, b.v_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const XReal& a, long b) {
  const int c = mpfr_cmp_si(a.v_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

#define IMPVOL_UNARY(name, fn)                          \
  XReal name(const XReal& x) {                          \
    XReal r(XReal::Uninit{}, x.precision_bits());       \
    fn(r.v_, x.v_, MPFR_RNDN);                           \
    r.check(#name);                                      \
    return r;                                            \
  }

IMPVOL_UNARY(abs, mpfr_abs)
IMPVOL_UNARY(sqrt, mpfr_sqrt)
IMPVOL_UNARY(exp, mpfr_exp)
IMPVOL_UNARY(expm1, mpfr_expm1)
IMPVOL_UNARY(log, mpfr_log)
IMPVOL_UNARY(log1p, mpfr_log1p)
IMPVOL_UNARY(erfc, mpfr_erfc)
IMPVOL_UNARY(sinh, mpfr_sinh)
IMPVOL_UNARY(cosh, mpfr_cosh)
#undef IMPVOL_UNARY

XReal pow(const XReal& base, const XReal& exponent) {
  XReal r(XReal::Uninit{}, static_cast<int>(max_prec(base.v_, exponent.v_)));
  mpfr_pow(r.v_, base.v_, exponent.v_, MPFR_RNDN);
  r.check("pow");
  return r;
}

XReal pow(const XReal& base, long exponent) {
  XReal r(XReal::Uninit{}, base.precision_bits());
  mpfr_pow_si(r.v_, base.v_, exponent, MPFR_RNDN);
  r.check("pow");
  return r;
}

XReal ldexp(const XReal& x, long k) {
  XReal r(x);
  mpfr_mul_2si(r.v_, r.v_, k, MPFR_RNDN);
  r.check("ldexp");
  return r;
}

std::ostream& operator<<(std::ostream& os, const XReal& x) { return os << x.to_string(); }

PrecisionConfig PrecisionConfig::for_bits(int bits) {
  PrecisionConfig cfg;
  cfg.working_bits = bits;
  cfg.quad_rel_tol = std::ldexp(1.0, -std::max(bits / 2 - 8, 32));
  cfg.root_rel_tol = std::ldexp(1.0, -std::max(bits / 2, 32));
  cfg.validate();
  return cfg;
}

void PrecisionConfig::validate() const {
  if (working_bits < kMinPrecisionBits) {
    throw DomainError("working_bits must be >= 64");
  }
  constexpr double kMaxTol = 0x1p-32;
  if (!(quad_rel_tol > 0 && quad_rel_tol <= kMaxTol)) {
    throw DomainError("quad_rel_tol must lie in (0, 2^-32]");
  }
  if (!(root_rel_tol > 0 && root_rel_tol <= kMaxTol)) {
    throw DomainError("root_rel_tol must lie in (0, 2^-32]");
  }
  if (quad_max_level < 3 || quad_max_level > 20) {
    throw DomainError("quad_max_level must lie in [3, 20]");
  }
}

}  // namespace impvol
