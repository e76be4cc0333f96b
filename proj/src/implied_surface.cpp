#include "impvol/implied_surface.hpp"

#include <cmath>
#include <optional>

namespace impvol {

namespace {

// Memoizes the last evaluation so that value and derivative callbacks of the
// root finder share one expensive evaluation at the same abscissa.
class LastValueCache {
 public:
  template <class Fn>
  const XReal& get(const XReal& x, Fn&& fn) {
    if (!x_ || !(*x_ == x) || x_->precision_bits() != x.precision_bits()) {
      value_ = fn(x);
      x_ = x;
    }
    return value_;
  }

 private:
  std::optional<XReal> x_;
  XReal value_;
};

XReal time_value_at(const XReal& spot, const XReal& strike, const XReal& maturity, const XReal& sigma) {
  return bs_time_value(VolPoint{spot, strike, maturity, sigma});
}

}  // namespace

ImpliedVolResult implied_vol_detailed(const Quote& q, const PrecisionConfig& cfg) {
  cfg.validate();
  const int bits = cfg.working_bits;
  const XReal spot(q.spot, bits);
  const XReal strike(q.strike, bits);
  const XReal maturity(q.maturity, bits);
  const XReal price(q.call_price, bits);
  if (!(spot > 0L)) throw DomainError("spot S must be positive");
  if (!(strike > 0L)) throw DomainError("strike K must be positive");
  if (!(maturity > 0L)) throw DomainError("maturity T must be positive");

  const XReal lower = spot > strike ? spot - strike : XReal::zero(bits);
  if (!(price > lower)) {
    throw DomainError("call price c = " + price.to_string(30) + " violates the bound (S-K)^+ < c < S: c <= (S-K)^+ = " +
                      lower.to_string(30));
  }
  if (!(price < spot)) {
    throw DomainError("call price c = " + price.to_string(30) + " violates the bound (S-K)^+ < c < S: c >= S = " +
                      spot.to_string(30));
  }
  const XReal resolution = XReal::pow2(-(bits / 2), bits) * spot;
  if (spot - price <= resolution) {
    throw DomainError("call price is within 2^-" + std::to_string(bits / 2) +
                      "*S of the upper bound of (S-K)^+ < c < S; implied volatility is not resolvable");
  }
  if (spot > strike && price - lower <= resolution) {
    throw DomainError("call price is within 2^-" + std::to_string(bits / 2) +
                      "*S of the lower bound of (S-K)^+ < c < S; implied volatility is not resolvable");
  }

  const XReal target = price - lower;
  const XReal log_moneyness = log(spot / strike);
  const XReal sqrt_t = sqrt(maturity);
  auto tv = [&](const XReal& sigma) { return time_value_at(spot, strike, maturity, sigma); };

  // Seed: at the money the price is ~ S sigma sqrt(T) / sqrt(2 pi); away from
  // it the normalized premium behaves like exp(-m^2 / (2 v^2)).
  const XReal sqrt_two_pi = sqrt(ldexp(XReal::pi(bits), 1));
  XReal seed = price * sqrt_two_pi / (spot * sqrt_t);
  if (abs(log_moneyness) >= XReal(0.1, bits)) {
    const XReal normalized = target / sqrt(spot * strike);
    if (normalized < XReal(0.5, bits)) {
      seed = abs(log_moneyness) / sqrt(ldexp(log(1L / normalized), 1)) / sqrt_t;
    } else {
      seed = target * sqrt_two_pi / (spot * sqrt_t);
    }
  }

  XReal lo = XReal::pow2(-40, bits);
  XReal hi = XReal::pow2(12, bits);
  seed = max(lo, min(hi, seed));
  for (int i = 0; tv(hi) <= target; ++i) {
    if (i > 64) throw NumericalError("implied_vol: could not bracket from above");
    hi = ldexp(hi, 4);
  }
  for (int i = 0; tv(lo) >= target; ++i) {
    if (i > 64) throw NumericalError("implied_vol: could not bracket from below");
    lo = ldexp(lo, -10);
  }
  if (seed > lo && seed < hi) {
    if (tv(seed) < target) {
      lo = seed;
    } else {
      hi = seed;
    }
  }
  // The log-space solve needs a representable (nonzero) premium at lo.
  while (tv(lo).is_zero()) {
    const XReal mid = sqrt(lo * hi);
    if (tv(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Solve log tv(e^s) = log target in s = log sigma.
  LastValueCache cache;
  auto tv_of_s = [&](const XReal& s) -> const XReal& { return cache.get(s, [&](const XReal& x) { return tv(exp(x)); }); };
  const MonotoneFunction g{
      [&](const XReal& s) { return log(tv_of_s(s)); },
      [&](const XReal& s) {
        const XReal sigma = exp(s);
        return vega(VolPoint{spot, strike, maturity, sigma}) * sigma / tv_of_s(s);
      }};
  const XReal s_lo = log(lo);
  const XReal s_hi = log(hi);
  std::optional<XReal> s_seed;
  if (seed > lo && seed < hi) s_seed = log(seed);
  const RootResult root = solve_monotone_detailed(g, log(target), s_lo, s_hi, cfg, s_seed);

  XReal sigma = exp(root.root);
  XReal residual = bs_price(VolPoint{spot, strike, maturity, sigma}) - price;
  return ImpliedVolResult{std::move(sigma), std::move(residual), root.iterations};
}

XReal implied_vol(const Quote& q, const PrecisionConfig& cfg) { return implied_vol_detailed(q, cfg).sigma; }

XReal c_hat(const XReal& strike) {
  if (!(strike > 0L)) throw DomainError("c_hat: strike K must be positive");
  const XReal e = XReal::e(strike.precision_bits());
  return (e - 1L) * strike + e * strike * strike;
}

void SpecializationPoint::validate() const {
  const XReal inv_e = 1L / XReal::e(strike.precision_bits());
  if (!(strike > 0L) || !(strike < inv_e)) {
    throw DomainError("strike K = " + strike.to_string(30) + " outside (0, 1/e)");
  }
  if (!(maturity > 0L)) throw DomainError("maturity T must be positive");
}

XReal f_eval(const SpecializationPoint& p, const PrecisionConfig& cfg) {
  const int bits = cfg.working_bits;
  const SpecializationPoint local{XReal(p.strike, bits), XReal(p.maturity, bits)};
  local.validate();
  const XReal spot = XReal::e(bits) * local.strike;
  return implied_vol(Quote{spot, local.strike, local.maturity, c_hat(local.strike)}, cfg);
}

XReal F_derivative(const XReal& x) { return norm_pdf(1L / x + ldexp(x, -1)); }

XReal F_eval(const XReal& x_in, const PrecisionConfig& cfg) {
  cfg.validate();
  const int bits = cfg.working_bits;
  const XReal x(x_in, bits);
  if (!(x > 0L)) throw DomainError("F: argument must be positive");
  const RealFunction integrand = [](const XReal& v) { return F_derivative(v); };
  const XReal limit = 1L / XReal::e(bits);

  if (x > kFLimitCrossover) {
    // N'(1/v + v/2) = e^{-1/2} e^{-1/(2v^2)} N'(v/2), so the tail beyond x lies
    // in [B e^{-1/(2x^2)}, B] with B = 2 e^{-1/2} N(-x/2).
    const XReal bound = ldexp(exp(XReal(-0.5, bits)) * norm_cdf(-ldexp(x, -1)), 1);
    const XReal shrink = exp(-1L / ldexp(x * x, 1));
    const XReal estimate = ldexp(bound * (shrink + 1L), -1);
    const XReal max_error = ldexp(bound * (1L - shrink), -1);
    if (max_error <= XReal::pow2(-(bits + 2), bits) * limit) return limit - estimate;
    return limit - integrate_upper(integrand, x, cfg);
  }
  if (x * kRoperPeakRatio < 1L) {
    const RealFunction inverted = [](const XReal& u) { return norm_pdf(u + 1L / ldexp(u, 1)) / (u * u); };
    return integrate_upper(inverted, 1L / x, cfg);
  }
  return integrate(integrand, XReal::zero(bits), x, cfg);
}

RootResult F_inv_detailed(const XReal& y_in, const PrecisionConfig& cfg) {
  cfg.validate();
  const int bits = cfg.working_bits;
  const XReal y(y_in, bits);
  const XReal limit = 1L / XReal::e(bits);
  if (!(y > 0L) || !(y < limit)) throw DomainError("F_inv: argument y = " + y.to_string(30) + " outside (0, 1/e)");

  // F(x) <= e^{-1/(2x^2)} for every x > 0, hence F^{-1}(y) >= (2 log(1/y))^{-1/2}.
  const XReal log_inv_y = log(1L / y);
  const XReal lo = 1L / sqrt(ldexp(log_inv_y, 1));
  XReal hi = ldexp(lo, 1);
  LastValueCache cache;
  auto F_cached = [&](const XReal& x) -> const XReal& { return cache.get(x, [&](const XReal& t) { return F_eval(t, cfg); }); };
  while (F_cached(hi) < y) hi = ldexp(hi, 1);

  // Seed from -log F(x) ~ 1/(2x^2) + 3 log(1/x) + log(2 e pi)/2.
  std::optional<XReal> guess;
  const double big_l = log_inv_y.to_double();
  if (big_l > 4.0) {
    double x = lo.to_double();
    const double shift = 0.5 * std::log(2.0 * M_E * M_PI);
    for (int i = 0; i < 20; ++i) {
      const double rest = big_l - 3.0 * std::log(1.0 / x) - shift;
      if (rest <= 0) break;
      x = 1.0 / std::sqrt(2.0 * rest);
    }
    guess = XReal(x, bits);
  }

  const MonotoneFunction g{[&](const XReal& x) { return log(F_cached(x)); },
                           [&](const XReal& x) { return F_derivative(x) / F_cached(x); }};
  return solve_monotone_detailed(g, log(y), lo, hi, cfg, guess);
}

XReal F_inv(const XReal& y, const PrecisionConfig& cfg) { return F_inv_detailed(y, cfg).root; }

}  // namespace impvol
