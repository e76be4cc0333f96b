#include "impvol/black_scholes.hpp"

#include <algorithm>

namespace impvol {

namespace {

int bits_of(const VolPoint& p) {
  return std::max({p.spot.precision_bits(), p.strike.precision_bits(), p.maturity.precision_bits(),
                   p.sigma.precision_bits()});
}

XReal intrinsic(const XReal& spot, const XReal& strike) {
  return spot > strike ? spot - strike : XReal::zero(std::max(spot.precision_bits(), strike.precision_bits()));
}

}  // namespace

void VolPoint::validate() const {
  if (!(spot > 0L)) throw DomainError("spot S must be positive");
  if (!(strike > 0L)) throw DomainError("strike K must be positive");
  if (!(maturity > 0L)) throw DomainError("maturity T must be positive");
  if (!(sigma > 0L)) throw DomainError("volatility sigma must be positive");
}

std::pair<XReal, XReal> d1_d2(const VolPoint& p) {
  p.validate();
  const XReal total_vol = p.sigma * sqrt(p.maturity);
  const XReal d1 = log(p.spot / p.strike) / total_vol + ldexp(total_vol, -1);
  XReal d2 = d1 - total_vol;
  return {d1, std::move(d2)};
}

XReal bs_time_value(const VolPoint& p) {
  const auto [d1, d2] = d1_d2(p);
  if (p.spot <= p.strike) {
    return p.spot * norm_cdf(d1) - p.strike * norm_cdf(d2);
  }
  // In the money: the call premium over S - K equals the put price.
  return p.strike * norm_cdf(-d2) - p.spot * norm_cdf(-d1);
}

XReal bs_price(const VolPoint& p) { return intrinsic(p.spot, p.strike) + bs_time_value(p); }

XReal bs_price_roper(const VolPoint& p, const PrecisionConfig& cfg) {
  p.validate();
  const int bits = std::max(bits_of(p), cfg.working_bits);
  const XReal spot(p.spot, bits);
  const XReal strike(p.strike, bits);
  const XReal log_moneyness = log(spot / strike);
  const XReal upper = XReal(p.sigma, bits) * sqrt(XReal(p.maturity, bits));
  PrecisionConfig local = cfg;
  local.working_bits = bits;
  XReal premium = XReal::zero(bits);
  if (abs(log_moneyness) > upper * kRoperPeakRatio) {
    // The integrand peaks at the upper endpoint with relative width ~ (v/m)^2;
    // in u = 1/v it becomes a Gaussian-type tail on [1/v, inf).
    const RealFunction integrand = [&log_moneyness](const XReal& u) {
      return norm_pdf(log_moneyness * u + 1L / ldexp(u, 1)) / (u * u);
    };
    premium = integrate_upper(integrand, 1L / upper, local);
  } else {
    const RealFunction integrand = [&log_moneyness](const XReal& v) {
      return norm_pdf(log_moneyness / v + ldexp(v, -1));
    };
    premium = integrate(integrand, XReal::zero(bits), upper, local);
  }
  return intrinsic(spot, strike) + spot * premium;
}

XReal vega(const VolPoint& p) {
  const auto [d1, d2] = d1_d2(p);
  return p.spot * sqrt(p.maturity) * norm_pdf(d1);
}

std::string_view to_string(ArbitrageVerdict v) {
  switch (v) {
    case ArbitrageVerdict::Inside: return "INSIDE";
    case ArbitrageVerdict::Boundary: return "BOUNDARY";
    case ArbitrageVerdict::Outside: return "OUTSIDE";
  }
  return "?";
}

ArbitrageVerdict check_arbitrage(const XReal& spot, const XReal& strike, const XReal& call_price) {
  if (!(spot > 0L) || !(strike > 0L)) throw DomainError("check_arbitrage: S and K must be positive");
  const int bits = std::max({spot.precision_bits(), strike.precision_bits(), call_price.precision_bits()});
  const XReal eps = XReal::pow2(8 - bits, bits) * spot;
  const XReal lower = intrinsic(spot, strike);
  // A zero lower bound (out of the money) is only touched by c == 0 itself;
  // the tolerance covers rounding in c - (S - K) and S - c.
  const XReal lower_tol = lower.is_zero() ? XReal::zero(bits) : eps;
  if (abs(call_price - lower) <= lower_tol || abs(spot - call_price) <= eps) return ArbitrageVerdict::Boundary;
  if (call_price > lower && call_price < spot) return ArbitrageVerdict::Inside;
  return ArbitrageVerdict::Outside;
}

}  // namespace impvol
