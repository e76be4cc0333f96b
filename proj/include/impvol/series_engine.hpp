#pragma once

#include <array>
#include <vector>

#include "impvol/implied_surface.hpp"

namespace impvol {

/// Truncated Taylor series sum_n coeffs[n] (x - center)^n, n <= order.
struct PowerSeries {
  XReal center;
  std::vector<XReal> coeffs;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  int precision_bits() const { return center.precision_bits(); }
  void validate() const;

  static PowerSeries constant(const XReal& value, const XReal& center, int order);
  /// The identity function x around center: [center, 1, 0, ...].
  static PowerSeries variable(const XReal& center, int order);

  /// Value at center + offset (Horner).
  XReal evaluate(const XReal& offset) const;
};

// Binary operations require equal centers; the result has the smaller order.
PowerSeries operator+(const PowerSeries& a, const PowerSeries& b);
PowerSeries operator-(const PowerSeries& a, const PowerSeries& b);
PowerSeries operator*(const PowerSeries& a, const PowerSeries& b);
PowerSeries operator*(const PowerSeries& a, const XReal& c);
PowerSeries operator+(const PowerSeries& a, const XReal& c);
PowerSeries divide(const PowerSeries& a, const PowerSeries& b);
PowerSeries reciprocal(const PowerSeries& a);
PowerSeries exp(const PowerSeries& a);
PowerSeries log(const PowerSeries& a);
PowerSeries pow(const PowerSeries& a, const XReal& alpha);
PowerSeries sqrt(const PowerSeries& a);
PowerSeries derivative(const PowerSeries& a);
PowerSeries antiderivative(const PowerSeries& a, const XReal& constant);
PowerSeries truncate(const PowerSeries& a, int order);

/// outer(outer.center + inner(x)); inner must have zero constant term. The
/// result is centered at inner.center.
PowerSeries compose(const PowerSeries& outer, const PowerSeries& inner);

/// Re-expands the polynomial about a new center.
PowerSeries recenter(const PowerSeries& a, const XReal& new_center);

/// Compositional inverse: for s around x0 with s(x0) = y0, returns the series
/// of s^{-1} around y0, whose constant term is x0.
PowerSeries series_reverse(const PowerSeries& s);

/// Taylor series of F at x0 > 0.
PowerSeries series_F(const XReal& x0, int order, const PrecisionConfig& cfg);

/// Series of f(K) = F^{-1}(K) / sqrt(T) at K = 1/(2e).
PowerSeries series_f_direct(int order, const XReal& maturity, const PrecisionConfig& cfg);

/// Dense trivariate series in offsets (X, Y, Z), total degree <= D.
class TriSeries {
 public:
  TriSeries(std::array<XReal, 3> center, int total_degree, int bits);

  const std::array<XReal, 3>& center() const { return center_; }
  int total_degree() const { return degree_; }
  int precision_bits() const { return bits_; }

  const XReal& at(int i, int j, int k) const;
  XReal& at(int i, int j, int k);
  const XReal& constant_term() const { return coeffs_.front(); }

  /// Number of stored monomials, C(D+3, 3).
  std::size_t size() const { return coeffs_.size(); }
  /// Exponent triple of the n-th stored monomial, graded by total degree.
  const std::array<int, 3>& exponents(std::size_t n) const;
  const XReal& coeff(std::size_t n) const { return coeffs_[n]; }
  XReal& coeff(std::size_t n) { return coeffs_[n]; }

  /// Smallest total degree carrying a coefficient of magnitude above
  /// threshold; D + 1 when there is none.
  int valuation(const XReal& threshold) const;

  static TriSeries constant(const std::array<XReal, 3>& center, int total_degree, const XReal& value);
  /// The offset variable with index axis (0, 1, 2) plus value.
  static TriSeries variable(const std::array<XReal, 3>& center, int total_degree, int axis, const XReal& value);

  friend TriSeries operator+(const TriSeries& a, const TriSeries& b);
  friend TriSeries operator-(const TriSeries& a, const TriSeries& b);
  friend TriSeries operator*(const TriSeries& a, const TriSeries& b);
  friend TriSeries operator*(const TriSeries& a, const XReal& c);
  friend TriSeries operator+(const TriSeries& a, const XReal& c);

 private:
  void check_compatible(const TriSeries& other) const;
  std::size_t index(int i, int j, int k) const;

  std::array<XReal, 3> center_;
  int degree_;
  int bits_;
  std::vector<XReal> coeffs_;
};

/// g(u) for a univariate g given by its Taylor series around u's constant term.
TriSeries compose_univariate(const PowerSeries& g, const TriSeries& u);

/// gamma_ijk of I(S, K, c) at (1/2, 1/(2e), 1/2 - 1/(4e)) with maturity T.
TriSeries tri_series_I(int total_degree, const XReal& maturity, const PrecisionConfig& cfg);

/// sum gamma_ijk (eX)^i X^j (eX + eX^2)^k truncated at order, centered at 1/(2e).
PowerSeries substitute_specialize(const TriSeries& t, int order);

}  // namespace impvol
