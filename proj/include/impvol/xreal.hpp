#pragma once

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace impvol {

/// Thrown when an operation's input lies outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a numerical procedure cannot deliver a result at the
/// requested accuracy (non-finite intermediate, non-convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMinPrecisionBits = 64;

/// Extended-precision real number. Every value carries its own precision;
/// binary operations produce a result at the larger of the two operand
/// precisions. NaN and infinities are never stored: any operation that would
/// produce one throws NumericalError.
class XReal {
 public:
  XReal();
  XReal(long value, int bits);
  XReal(int value, int bits) : XReal(static_cast<long>(value), bits) {}
  XReal(double value, int bits);
  XReal(const XReal& other);
  XReal(const XReal& other, int bits);  // rounds to `bits`
  XReal(XReal&& other) noexcept;
  XReal& operator=(const XReal& other);
  XReal& operator=(XReal&& other) noexcept;
  ~XReal();

  /// Parses a decimal literal ("0.25", "-1.5e-8", "3").
  static XReal from_string(std::string_view text, int bits);
  static XReal zero(int bits) { return XReal(0L, bits); }
  static XReal one(int bits) { return XReal(1L, bits); }
  static XReal pi(int bits);
  static XReal e(int bits);
  /// 2^exponent, exact.
  static XReal pow2(long exponent, int bits);
  /// Correctly rounded value of a GMP rational.
  static XReal from_mpq(mpq_srcptr q, int bits);

  [[nodiscard]] int precision_bits() const { return static_cast<int>(mpfr_get_prec(v_)); }
  [[nodiscard]] double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  [[nodiscard]] long to_long() const { return mpfr_get_si(v_, MPFR_RNDZ); }
  /// Scientific notation with `digits` significant digits (0 = enough to
  /// round-trip the working precision).
  [[nodiscard]] std::string to_string(int digits = 0) const;

  [[nodiscard]] bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  [[nodiscard]] int sign() const { return mpfr_sgn(v_); }
  /// Binary exponent e with 0.5 <= |x| / 2^e < 1 (x != 0).
  [[nodiscard]] long exponent2() const { return mpfr_get_exp(v_); }

  XReal& operator+=(const XReal& rhs);
  XReal& operator-=(const XReal& rhs);
  XReal& operator*=(const XReal& rhs);
  XReal& operator/=(const XReal& rhs);
  XReal& operator*=(long rhs);
  XReal& operator/=(long rhs);
  /// this += a * b with a single rounding.
  XReal& fma_add(const XReal& a, const XReal& b);
  /// this -= a * b with a single rounding.
  XReal& fms_sub(const XReal& a, const XReal& b);

  XReal operator-() const;

  friend XReal operator+(const XReal& a, const XReal& b);
  friend XReal operator-(const XReal& a, const XReal& b);
  friend XReal operator*(const XReal& a, const XReal& b);
  friend XReal operator/(const XReal& a, const XReal& b);
  friend XReal operator+(const XReal& a, long b);
  friend XReal operator-(const XReal& a, long b);
  friend XReal operator-(long a, const XReal& b);
  friend XReal operator*(const XReal& a, long b);
  friend XReal operator/(const XReal& a, long b);
  friend XReal operator/(long a, const XReal& b);
  friend XReal operator+(long a, const XReal& b) { return b + a; }
  friend XReal operator*(long a, const XReal& b) { return b * a; }

  friend bool operator==(const XReal& a, const XReal& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const XReal& a, const XReal& b);
  friend bool operator==(const XReal& a, long b) { return mpfr_cmp_si(a.v_, b) == 0; }
  friend std::partial_ordering operator<=>(const XReal& a, long b);

  friend XReal abs(const XReal& x);
  friend XReal sqrt(const XReal& x);
  friend XReal exp(const XReal& x);
  friend XReal expm1(const XReal& x);
  friend XReal log(const XReal& x);
  friend XReal log1p(const XReal& x);
  friend XReal erfc(const XReal& x);
  friend XReal sinh(const XReal& x);
  friend XReal cosh(const XReal& x);
  friend XReal pow(const XReal& base, const XReal& exponent);
  friend XReal pow(const XReal& base, long exponent);
  /// x * 2^k, exact.
  friend XReal ldexp(const XReal& x, long k);
  friend XReal min(const XReal& a, const XReal& b) { return a < b ? a : b; }
  friend XReal max(const XReal& a, const XReal& b) { return a < b ? b : a; }

  // Mixing with binary doubles would silently truncate through the long
  // overloads; construct an XReal explicitly instead.
  friend XReal operator+(const XReal&, double) = delete;
  friend XReal operator-(const XReal&, double) = delete;
  friend XReal operator*(const XReal&, double) = delete;
  friend XReal operator/(const XReal&, double) = delete;
  friend XReal operator*(double, const XReal&) = delete;
  friend bool operator==(const XReal&, double) = delete;
  friend std::partial_ordering operator<=>(const XReal&, double) = delete;

  friend std::ostream& operator<<(std::ostream& os, const XReal& x);

  [[nodiscard]] mpfr_srcptr raw() const { return v_; }

 private:
  struct Uninit {};
  XReal(Uninit, int bits);
  void check(const char* op) const;

  mpfr_t v_;
};

/// Working-precision context passed explicitly to every numerical routine.
struct PrecisionConfig {
  int working_bits = 256;
  double quad_rel_tol = 0x1p-120;
  double root_rel_tol = 0x1p-128;
  /// Level budget of the double-exponential quadrature (step 2^-level).
  int quad_max_level = 12;

  /// Default tolerances for a working precision: quadrature at
  /// 2^-(bits/2 - 8), root finding at 2^-(bits/2).
  static PrecisionConfig for_bits(int bits);

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  [[nodiscard]] XReal quad_tol() const { return XReal(quad_rel_tol, working_bits); }
  [[nodiscard]] XReal root_tol() const { return XReal(root_rel_tol, working_bits); }
  [[nodiscard]] XReal real(double v) const { return XReal(v, working_bits); }
  [[nodiscard]] XReal real(long v) const { return XReal(v, working_bits); }
  [[nodiscard]] XReal real(int v) const { return XReal(v, working_bits); }
  [[nodiscard]] XReal parse(std::string_view text) const { return XReal::from_string(text, working_bits); }
};

}  // namespace impvol
