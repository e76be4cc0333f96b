#pragma once

#include "impvol/black_scholes.hpp"

namespace impvol {

struct ImpliedVolResult {
  XReal sigma;
  XReal residual;  // bs_price(sigma) - c
  int iterations = 0;
};

/// The implied volatility I(S, K, c): the unique sigma > 0 with
/// bs_price(S, K, T, sigma) = c. Throws DomainError naming the violated
/// bound when c is outside ((S-K)^+, S) or too close to a bound to be
/// resolved at the working precision.
ImpliedVolResult implied_vol_detailed(const Quote& q, const PrecisionConfig& cfg);
XReal implied_vol(const Quote& q, const PrecisionConfig& cfg);

/// (e - 1) K + e K^2, the call price along the specialization S = eK.
XReal c_hat(const XReal& strike);

/// A strike in (0, 1/e) together with the session maturity.
struct SpecializationPoint {
  XReal strike;
  XReal maturity;

  void validate() const;
};

/// f(K) = I(eK, K, c_hat(K)).
XReal f_eval(const SpecializationPoint& p, const PrecisionConfig& cfg);

/// Above this abscissa F is evaluated as 1/e minus its tail.
inline constexpr long kFLimitCrossover = 40;

/// F(x) = integral_0^x N'(1/v + v/2) dv, mapping (0, inf) onto (0, 1/e).
XReal F_eval(const XReal& x, const PrecisionConfig& cfg);

/// F'(x) = N'(1/x + x/2).
XReal F_derivative(const XReal& x);

/// Inverse of F on (0, 1/e).
XReal F_inv(const XReal& y, const PrecisionConfig& cfg);
RootResult F_inv_detailed(const XReal& y, const PrecisionConfig& cfg);

}  // namespace impvol
