#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "impvol/precision_core.hpp"

using namespace impvol;

namespace {

const PrecisionConfig kCfg = PrecisionConfig::for_bits(256);

XReal R(const char* s, int bits = 256) { return XReal::from_string(s, bits); }

bool close_rel(const XReal& a, const XReal& b, const XReal& tol) {
  return abs(a - b) <= tol * max(abs(b), XReal::pow2(-1000, b.precision_bits()));
}

}  // namespace

TEST_CASE("XReal basics") {
  const XReal a(3, 256);
  const XReal b = R("0.5");
  CHECK((a + b) == R("3.5"));
  CHECK((a * b) == R("1.5"));
  CHECK((1L / b) == XReal(2, 256));
  CHECK(a.precision_bits() == 256);
  CHECK((XReal(1, 128) + XReal(1, 512)).precision_bits() == 512);
  CHECK_THROWS_AS(XReal(1, 32), DomainError);
  CHECK_THROWS_AS(log(XReal::zero(128)), NumericalError);
  CHECK_THROWS_AS(XReal(1, 128) / XReal::zero(128), NumericalError);
  CHECK_THROWS_AS(XReal::from_string("1.2x", 128), DomainError);
  CHECK(R("-1.25e-3").to_string(6) == "-1.25e-3");
  CHECK(R("0").to_string() == "0");

  XReal acc = XReal::zero(256);
  acc.fma_add(a, b);
  acc.fms_sub(b, b);
  CHECK(acc == R("1.25"));

  XReal moved = std::move(acc);
  acc = a;
  CHECK(acc == a);
  CHECK(moved == R("1.25"));
}

TEST_CASE("PrecisionConfig invariants") {
  CHECK_NOTHROW(PrecisionConfig::for_bits(64).validate());
  CHECK(kCfg.quad_rel_tol == std::ldexp(1.0, -120));
  PrecisionConfig bad = kCfg;
  bad.quad_rel_tol = 1e-3;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = kCfg;
  bad.working_bits = 32;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("norm_pdf") {
  const XReal zero = XReal::zero(256);
  CHECK(close_rel(norm_pdf(zero), 1L / sqrt(ldexp(XReal::pi(256), 1)), XReal::pow2(-250, 256)));
  for (const char* a : {"0.3", "1.7", "12.5", "40"}) {
    CHECK(norm_pdf(R(a)) == norm_pdf(-R(a)));
  }

  // x = 3 against a direct 512-bit MPFR evaluation, within 2 ulp at 256 bits.
  mpfr_t ref, tmp;
  mpfr_inits2(512, ref, tmp, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_si(ref, -9, MPFR_RNDN);
  mpfr_div_ui(ref, ref, 2, MPFR_RNDN);
  mpfr_exp(ref, ref, MPFR_RNDN);
  mpfr_const_pi(tmp, MPFR_RNDN);
  mpfr_mul_ui(tmp, tmp, 2, MPFR_RNDN);
  mpfr_sqrt(tmp, tmp, MPFR_RNDN);
  mpfr_div(ref, ref, tmp, MPFR_RNDN);
  char* s = nullptr;
  mpfr_asprintf(&s, "%.160Re", ref);
  const XReal reference = XReal::from_string(s, 512);
  mpfr_free_str(s);
  mpfr_clears(ref, tmp, static_cast<mpfr_ptr>(nullptr));

  const XReal value = norm_pdf(XReal(3, 256));
  const XReal ulp = XReal::pow2(value.exponent2() - 256, 512);
  CHECK(abs(XReal(value, 512) - reference) <= 2L * ulp);
  CHECK(close_rel(value, R("0.004431848411938007175602352696121011243168731804341"), R("1e-48")));
}

TEST_CASE("norm_cdf") {
  CHECK(norm_cdf(XReal::zero(256)) == R("0.5"));
  const XReal bound = XReal::pow2(-256 + 8, 256);
  for (double x = -38.0; x <= 38.0; x += 0.37) {
    const XReal v(x, 256);
    CHECK(abs(norm_cdf(v) + norm_cdf(-v) - 1L) <= bound);
  }
  CHECK(close_rel(norm_cdf(XReal(2, 256)), R("0.97724986805182079279971736283346656252822377629832"),
                  R("1e-48")));

  // N(2) against quadrature of the density over (-inf, 2].
  const RealFunction reflected = [](const XReal& y) { return norm_pdf(-y); };
  const XReal by_quadrature = integrate_upper(reflected, XReal(-2, 256), kCfg);
  CHECK(close_rel(norm_cdf(XReal(2, 256)), by_quadrature, kCfg.quad_tol()));
}

TEST_CASE("norm_cdf is strictly increasing on a grid, deep tails included") {
  XReal prev = norm_cdf(XReal(-80, 256));
  CHECK(prev > 0L);
  for (int i = -599; i <= 600; ++i) {
    const XReal cur = norm_cdf(ldexp(XReal(i, 256), -3));
    // Above ~+19 the cdf rounds to 1 at 256 bits; only check where resolvable.
    if (i < 150) CHECK(cur > prev);
    prev = cur;
  }
  CHECK(norm_cdf(XReal(-60, 256)) < XReal::pow2(-1000, 256));
}

TEST_CASE("derivative of norm_cdf matches norm_pdf with observed order 2") {
  const XReal x = R("0.7");
  std::vector<double> errors;
  for (int k = 4; k <= 9; ++k) {
    const XReal h = XReal::pow2(-k, 256);
    const XReal fd = (norm_cdf(x + h) - norm_cdf(x - h)) / ldexp(h, 1);
    errors.push_back(abs(fd - norm_pdf(x)).to_double());
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.02));
  }
}

TEST_CASE("integrate: constants, normalization and additivity") {
  const RealFunction one = [](const XReal& x) { return XReal::one(x.precision_bits()); };
  CHECK(close_rel(integrate(one, XReal::zero(256), XReal::one(256), kCfg), XReal::one(256), kCfg.quad_tol()));

  const RealFunction pdf = [](const XReal& x) { return norm_pdf(x); };
  CHECK(close_rel(integrate_real_line(pdf, kCfg), XReal::one(256), kCfg.quad_tol()));

  const RealFunction smooth = [](const XReal& x) { return exp(-x) * cosh(x * x) / (x * x + 1L); };
  const XReal a = R("-0.5"), b = R("0.8"), c = R("2.25");
  const XReal left = integrate(smooth, a, b, kCfg);
  const XReal right = integrate(smooth, b, c, kCfg);
  const XReal whole = integrate(smooth, a, c, kCfg);
  CHECK(abs(left + right - whole) <= 4L * kCfg.quad_tol() * abs(whole));

  CHECK_THROWS_AS(integrate(one, XReal::one(256), XReal::zero(256), kCfg), DomainError);
}

TEST_CASE("integrate: essentially flat integrand N'(1/v + v/2)") {
  const RealFunction g = [](const XReal& v) { return norm_pdf(1L / v + ldexp(v, -1)); };
  const XReal f1 = integrate(g, XReal::zero(256), XReal::one(256), kCfg);
  CHECK(close_rel(f1, R("0.046697416058070237541144135172771793368994021818464"), R("1e-48")));

  // A second tanh-sinh run with a different node layout (split at 0.37).
  const XReal split = R("0.37");
  const XReal f1_split = integrate(g, XReal::zero(256), split, kCfg) + integrate(g, split, XReal::one(256), kCfg);
  CHECK(close_rel(f1, f1_split, 4L * kCfg.quad_tol()));

  // Tiny value: relative accuracy is kept.
  const XReal tiny = integrate(g, XReal::zero(256), R("0.05"), kCfg);
  CHECK(close_rel(tiny, R("4.1534811264869091253279604897746895021648623763869e-92"), R("1e-45")));
}

TEST_CASE("integrate reports non-convergence") {
  PrecisionConfig cfg = kCfg;
  cfg.quad_max_level = 3;
  const RealFunction rough = [](const XReal& x) { return sqrt(abs(x - XReal(1, x.precision_bits()) / 3L)); };
  CHECK_THROWS_AS(integrate(rough, XReal::zero(256), XReal::one(256), cfg), QuadratureError);
}

TEST_CASE("solve_monotone") {
  const MonotoneFunction identity{[](const XReal& x) { return x; },
                                  [](const XReal& x) { return XReal::one(x.precision_bits()); }};
  CHECK(close_rel(solve_monotone(identity, R("0.3"), XReal::zero(256), XReal::one(256), kCfg), R("0.3"),
                  kCfg.root_tol()));

  const MonotoneFunction cdf{[](const XReal& x) { return norm_cdf(x); },
                             [](const XReal& x) { return norm_pdf(x); }};
  CHECK(abs(solve_monotone(cdf, R("0.5"), XReal(-3, 256), XReal(4, 256), kCfg)) <= kCfg.root_tol());

  // Cube root against MPFR's cbrt.
  const MonotoneFunction cube{[](const XReal& x) { return x * x * x; },
                              [](const XReal& x) { return 3L * x * x; }};
  const XReal root = solve_monotone(cube, XReal(5, 256), XReal::zero(256), XReal(2, 256), kCfg);
  mpfr_t ref;
  mpfr_init2(ref, 256);
  mpfr_set_si(ref, 5, MPFR_RNDN);
  mpfr_cbrt(ref, ref, MPFR_RNDN);
  char* s = nullptr;
  mpfr_asprintf(&s, "%.90Re", ref);
  const XReal cbrt5 = XReal::from_string(s, 256);
  mpfr_free_str(s);
  mpfr_clear(ref);
  CHECK(close_rel(root, cbrt5, 4L * kCfg.root_tol()));

  // Without a derivative the solver bisects and still converges.
  const MonotoneFunction cube_no_derivative{cube.value, {}};
  const XReal root_bisect = solve_monotone(cube_no_derivative, XReal(5, 256), XReal::zero(256), XReal(2, 256), kCfg);
  CHECK(close_rel(root_bisect, cbrt5, 4L * kCfg.root_tol()));

  // Decreasing functions are handled.
  const MonotoneFunction decreasing{[](const XReal& x) { return -x; },
                                    [](const XReal& x) { return XReal(-1, x.precision_bits()); }};
  CHECK(close_rel(solve_monotone(decreasing, R("-0.25"), XReal::zero(256), XReal::one(256), kCfg), R("0.25"),
                  kCfg.root_tol()));

  CHECK_THROWS_AS(solve_monotone(cube, XReal(9, 256), XReal::zero(256), XReal(2, 256), kCfg), DomainError);
}

TEST_CASE("solve_monotone round trip is consistent with the local slope") {
  const MonotoneFunction g{[](const XReal& x) { return exp(x) + x; },
                           [](const XReal& x) { return exp(x) + 1L; }};
  for (const char* t : {"-3.5", "0.1", "2", "40"}) {
    const RootResult r = solve_monotone_detailed(g, R(t), XReal(-10, 256), XReal(10, 256), kCfg);
    const XReal slope = exp(r.root) + 1L;
    CHECK(abs(r.residual) <= 2L * slope * kCfg.root_tol() * max(XReal::one(256), abs(r.root)));
  }
}
