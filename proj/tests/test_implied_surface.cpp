#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "impvol/implied_surface.hpp"

using namespace impvol;

namespace {

constexpr int kBits = 256;
const PrecisionConfig kCfg = PrecisionConfig::for_bits(kBits);

XReal R(const char* s) { return XReal::from_string(s, kBits); }
XReal R(double v) { return XReal(v, kBits); }
XReal R(int v) { return XReal(v, kBits); }

const XReal kE = XReal::e(kBits);
const XReal kHalfInvE = 1L / ldexp(kE, 1);

// mpmath, 80 digits (tests/oracles/compute_oracles.py).
const char* const kFInvHalfInvE = "1.9721336276896816959799449775965757179258984070365";
const char* const kF1 = "0.046697416058070237541144135172771793368994021818464";

bool close(const XReal& a, const XReal& b, const XReal& rel) { return abs(a - b) <= rel * abs(b); }

}  // namespace

TEST_CASE("implied_vol round trips") {
  const XReal sigma = R("0.2");
  const XReal c = bs_price({R(1), R(1), R(1), sigma});
  CHECK(close(implied_vol({R(1), R(1), R(1), c}, kCfg), sigma, kCfg.root_tol() * 4L));

  // Close to the upper bound: large sigma, small re-pricing residual.
  const ImpliedVolResult high = implied_vol_detailed({R(1), R(2), R(1), R(1) - R("1e-6")}, kCfg);
  CHECK(high.sigma > 5L);
  CHECK(abs(high.residual) <= XReal::pow2(-200, kBits));

  // The distinguished point (1/2, 1/(2e), 1/2 - 1/(4e)) equals F^{-1}(1/(2e)).
  const XReal center_c = R("0.5") - 1L / (4L * kE);
  const XReal at_center = implied_vol({R("0.5"), kHalfInvE, R(1), center_c}, kCfg);
  CHECK(close(at_center, R(kFInvHalfInvE), R("1e-45")));
  CHECK(close(at_center, F_inv(kHalfInvE, kCfg), R("1e-33")));
}

TEST_CASE("implied_vol domain errors") {
  CHECK_THROWS_AS(implied_vol({R(1), R("0.5"), R(1), R("0.5")}, kCfg), DomainError);
  CHECK_THROWS_AS(implied_vol({R(1), R(1), R(1), R(1)}, kCfg), DomainError);
  CHECK_THROWS_AS(implied_vol({R(1), R(1), R(1), R("1.5")}, kCfg), DomainError);
  CHECK_THROWS_AS(implied_vol({R(1), R(2), R(1), R(0)}, kCfg), DomainError);
  CHECK_THROWS_AS(implied_vol({R(-1), R(2), R(1), R("0.1")}, kCfg), DomainError);
  // Within 2^-128 S of the upper bound.
  CHECK_THROWS_AS(implied_vol({R(1), R(2), R(1), R(1) - XReal::pow2(-140, kBits)}, kCfg), DomainError);
  try {
    implied_vol({R(1), R("0.5"), R(1), R("0.25")}, kCfg);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("(S-K)^+ < c < S") != std::string::npos);
  }
}

TEST_CASE("implied_vol round trip over a 3-decade moneyness grid") {
  int recovered = 0;
  int unresolvable = 0;
  for (int i = 0; i <= 6; ++i) {
    const XReal spot = exp(R(std::log(10.0) * (-1.5 + 0.5 * i)));
    for (int j = 0; j <= 8; ++j) {
      const XReal sigma = exp(R(std::log(0.01) + j * (std::log(5.0) - std::log(0.01)) / 8));
      const VolPoint p{spot, R(1), R(1), sigma};
      const XReal c = bs_price(p);
      const XReal premium = spot > 1L ? c - (spot - 1L) : c;
      if (spot > 1L && premium <= XReal::pow2(-128, kBits) * spot) {
        // In the money with a premium below the working resolution: rejected.
        CHECK_THROWS_AS(implied_vol({spot, R(1), R(1), c}, kCfg), DomainError);
        ++unresolvable;
        continue;
      }
      const XReal back = implied_vol({spot, R(1), R(1), c}, kCfg);
      CHECK(abs(back - sigma) <= 64L * kCfg.root_tol() * max(XReal::one(kBits), sigma));
      ++recovered;
    }
  }
  MESSAGE("recovered " << recovered << ", unresolvable " << unresolvable);
  CHECK(recovered >= 50);
}

TEST_CASE("c_hat") {
  CHECK(abs(c_hat(kHalfInvE) - (R("0.5") - 1L / (4L * kE))) <= XReal::pow2(-250, kBits));
  CHECK(abs(c_hat(1L / kE) - 1L) <= XReal::pow2(-250, kBits));
  for (int i = 1; i < 40; ++i) {
    const XReal k = XReal(i, kBits) / 40L / kE;
    const XReal c = c_hat(k);
    CHECK(c > (kE - 1L) * k);
    CHECK(c < kE * k);
  }
}

TEST_CASE("f_eval") {
  const XReal at_center = f_eval({kHalfInvE, R(1)}, kCfg);
  CHECK(close(at_center, R(kFInvHalfInvE), R("1e-33")));

  const XReal t1 = f_eval({R("0.1"), R(1)}, kCfg);
  const XReal t4 = f_eval({R("0.1"), R(4)}, kCfg);
  CHECK(close(t1, 2L * t4, R("1e-33")));

  XReal prev = XReal::zero(kBits);
  for (int i = 1; i < 30; ++i) {
    const XReal k = XReal(i, kBits) / 30L / kE;
    const XReal v = f_eval({k, R(1)}, kCfg);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(f_eval({1L / kE, R(1)}, kCfg), DomainError);
  CHECK_THROWS_AS(f_eval({R(0), R(1)}, kCfg), DomainError);
}

TEST_CASE("F_eval") {
  CHECK(close(F_eval(R(1), kCfg), R(kF1), R("1e-48")));
  CHECK(close(F_eval(R("0.2"), kCfg), R("0.0000000064549352959877196572169096591751636422190490665236"), R("1e-48")));
  CHECK(close(F_eval(R(3), kCfg), R("0.28974212059787194135237352971631239450313001917882"), R("1e-48")));
  const XReal tiny = F_eval(R("0.05"), kCfg);
  CHECK(close(tiny, R("4.1534811264869091253279604897746895021648623763869e-92"), R("1e-45")));
  CHECK(tiny < exp(R(-200)));

  const XReal inv_e = 1L / kE;
  CHECK(abs(F_eval(R(50), kCfg) - inv_e) <= R("1e-6"));
  // The tail beyond 50 is ~1e-138, below one ulp of 1/e at 256 bits.
  CHECK(F_eval(R(50), kCfg) <= inv_e);
  CHECK(F_eval(R(20), kCfg) < inv_e);

  // Both sides of the limit-branch crossover agree.
  const XReal below = F_eval(R(40) - XReal::pow2(-30, kBits), kCfg);
  const XReal above = F_eval(R(40) + XReal::pow2(-30, kBits), kCfg);
  CHECK(abs(above - below) <= XReal::pow2(-240, kBits));
  PrecisionConfig wide = PrecisionConfig::for_bits(1024);
  const XReal far = R(41);
  CHECK(abs(F_eval(XReal(far, 1024), wide) - (1L / XReal::e(1024) - integrate_upper([](const XReal& v) {
                                                  return F_derivative(v);
                                                }, XReal(far, 1024), wide))) <= XReal::pow2(-1000, 1024));

  // F(1) through the pricing integral along S = eK.
  const XReal k0 = R("0.23");
  const XReal via_roper = (bs_price_roper({kE * k0, k0, R(1), R(1)}, kCfg) - (kE - 1L) * k0) / (kE * k0);
  CHECK(close(via_roper, F_eval(R(1), kCfg), 4L * kCfg.quad_tol()));

  // Small x goes through the 1/v form; compare against the plain integral.
  const XReal small = R("0.1");
  const XReal plain = integrate([](const XReal& v) { return F_derivative(v); }, XReal::zero(kBits), small, kCfg);
  CHECK(close(F_eval(small, kCfg), plain, 8L * kCfg.quad_tol()));
  CHECK(close(F_eval(small, kCfg), R("4.5279925383618054177235534107637888423318930461073e-26"), R("1e-45")));
  CHECK(F_eval(R("0.01"), kCfg) > 0L);

  CHECK_THROWS_AS(F_eval(R(0), kCfg), DomainError);
}

TEST_CASE("F is increasing with range (0, 1/e)") {
  XReal prev = XReal::zero(kBits);
  for (int i = 0; i <= 40; ++i) {
    const XReal x = exp(R(std::log(0.04) + i * (std::log(60.0) - std::log(0.04)) / 40));
    const XReal v = F_eval(x, kCfg);
    if (x < 30L) {
      CHECK(v > prev);
      CHECK(v < 1L / kE);
    } else {
      // 1/e - F(x) is below the working resolution here.
      CHECK(v >= prev);
      CHECK(v <= 1L / kE);
    }
    prev = v;
  }
}

TEST_CASE("F_inv") {
  CHECK(abs(F_inv(R(kF1), kCfg) - 1L) <= 4L * kCfg.root_tol());

  // F(z) <= exp(-1/(2 z^2)) for all z > 0, hence F^{-1}(y) >= (2 log(1/y))^{-1/2}.
  const XReal y = R("1e-8");
  const XReal x = F_inv(y, kCfg);
  CHECK(close(x, R("0.20322054911642938575939168279841818496379746413493"), R("1e-45")));
  CHECK(x > 1L / sqrt(2L * log(1L / y)));

  for (const char* t : {"1", "2"}) {
    const XReal maturity = R(t);
    const XReal lhs = sqrt(maturity) * f_eval({kHalfInvE, maturity}, kCfg);
    CHECK(close(lhs, F_inv(kHalfInvE, kCfg), R("1e-33")));
  }
  CHECK_THROWS_AS(F_inv(R(0), kCfg), DomainError);
  CHECK_THROWS_AS(F_inv(1L / kE, kCfg), DomainError);
}

TEST_CASE("F and F_inv are mutually inverse and monotone") {
  XReal prev = XReal::zero(kBits);
  for (const char* ys : {"1e-30", "1e-12", "1e-5", "0.01", "0.1", "0.3", "0.36"}) {
    const XReal y = R(ys);
    const XReal x = F_inv(y, kCfg);
    CHECK(x > prev);
    CHECK(close(F_eval(x, kCfg), y, 16L * kCfg.quad_tol()));
    prev = x;
  }
  for (const char* xs : {"0.08", "0.5", "1", "4", "9"}) {
    const XReal x = R(xs);
    CHECK(close(F_inv(F_eval(x, kCfg), kCfg), x, 16L * kCfg.root_tol()));
  }
}

TEST_CASE("two-path identity sqrt(T) f(K) = F^{-1}(K)") {
  for (int i = 0; i < 8; ++i) {
    const XReal k = exp(R(std::log(1e-3) + i * (std::log(0.36) - std::log(1e-3)) / 7));
    const XReal inv = F_inv(k, kCfg);
    for (const char* t : {"1", "4"}) {
      const XReal maturity = R(t);
      CHECK(abs(sqrt(maturity) * f_eval({k, maturity}, kCfg) - inv) <= R("1e-30"));
    }
  }
}
