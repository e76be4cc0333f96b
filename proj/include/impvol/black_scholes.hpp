#pragma once

#include <string_view>
#include <utility>

#include "impvol/precision_core.hpp"

namespace impvol {

// Zero interest rate, no dividends, European calls only.

/// Model inputs of a call price: spot, strike, maturity (years) and
/// annualized volatility. All strictly positive.
struct VolPoint {
  XReal spot;
  XReal strike;
  XReal maturity;
  XReal sigma;

  void validate() const;
};

/// An observed call price with its contract terms.
struct Quote {
  XReal spot;
  XReal strike;
  XReal maturity;
  XReal call_price;
};

/// (d1, d2) with d1 - d2 = sigma sqrt(T).
std::pair<XReal, XReal> d1_d2(const VolPoint& p);

/// S N(d1) - K N(d2). Evaluated as (S-K)^+ plus the time value so that the
/// premium over intrinsic keeps full relative precision on both sides of
/// the money.
XReal bs_price(const VolPoint& p);

/// bs_price - (S-K)^+, computed without cancellation against the intrinsic
/// value (put-call parity on the in-the-money side).
XReal bs_time_value(const VolPoint& p);

/// Above this |log(S/K)| / (sigma sqrt T) the Roper integral is taken in 1/v.
inline constexpr long kRoperPeakRatio = 8;

/// (S-K)^+ + S * integral_0^{sigma sqrt T} N'(log(S/K)/v + v/2) dv.
XReal bs_price_roper(const VolPoint& p, const PrecisionConfig& cfg);

/// S sqrt(T) N'(d1) > 0.
XReal vega(const VolPoint& p);

enum class ArbitrageVerdict { Inside, Boundary, Outside };

std::string_view to_string(ArbitrageVerdict v);

/// Membership of c in ((S-K)^+, S). Equality with S or with S - K > 0 is
/// detected within 2^(8 - bits) * S (bits = precision of the inputs); the
/// zero lower bound of an out-of-the-money call only by c == 0.
ArbitrageVerdict check_arbitrage(const XReal& spot, const XReal& strike, const XReal& call_price);

}  // namespace impvol
