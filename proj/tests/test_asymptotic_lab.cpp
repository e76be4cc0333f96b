#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "impvol/asymptotic_lab.hpp"

using namespace impvol;

namespace {

constexpr int kBits = 256;
const PrecisionConfig kCfg = PrecisionConfig::for_bits(kBits);

XReal R(const char* s) { return XReal::from_string(s, kBits); }

std::vector<XReal> powers_of_ten(std::initializer_list<int> exponents) {
  std::vector<XReal> out;
  for (int k : exponents) out.push_back(pow(XReal(10, kBits), static_cast<long>(k)));
  return out;
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (CheckKind k : {CheckKind::NPrimeRemainder, CheckKind::FLeadingOrder, CheckKind::FLog, CheckKind::FinvBound,
                      CheckKind::LogFRemainder, CheckKind::FinvSharp, CheckKind::IntIdentity}) {
    CHECK(parse_check_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_check_kind("F_SHARP").has_value());
}

TEST_CASE("F_leading") {
  const XReal x = R("0.2");
  const XReal identity = F_leading(x) * sqrt(2L * XReal::e(kBits) * XReal::pi(kBits)) / (x * x * x);
  CHECK(abs(identity - exp(-1L / (2L * x * x))) <= XReal::pow2(-245, kBits) * identity);

  // F / F_leading = 1 - 3x^2 + O(x^4); mpmath ratios at 0.2, 0.1, 0.05.
  const char* const expected[][2] = {{"0.2", "0.8947879053526413255196216988875445619834"},
                                     {"0.1", "0.9702127393178984412839565344897870917033"},
                                     {"0.05", "0.9922835326808417655479655243415759309065"}};
  for (const auto& [xs, ratio] : expected) {
    const XReal at = R(xs);
    const XReal r = F_eval(at, kCfg) / F_leading(at);
    CHECK(abs(r - R(ratio)) <= R("1e-38"));
    CHECK(((1L - r) / (at * at)).to_double() == doctest::Approx(3.0).epsilon(0.15));
  }
  CHECK_THROWS_AS(F_leading(R("0")), DomainError);
}

TEST_CASE("check_int_identity") {
  for (const char* x : {"1", "0.3", "0.1", "0.05", "0.7"}) {
    const AsymptoticReport r = check_int_identity(R(x), kCfg);
    CHECK(r.kind == CheckKind::IntIdentity);
    CHECK(r.pass);
    CHECK(r.observed.front() <= R("1e-30"));
  }
  CHECK_THROWS_AS(check_int_identity(R("1.5"), kCfg), DomainError);
  CHECK_THROWS_AS(check_int_identity(R("0"), kCfg), DomainError);
}

TEST_CASE("fit_loglog_slope") {
  std::vector<double> x;
  std::vector<double> y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(std::log(0.01 * (i + 1)));
    y.push_back(3.0 * x.back() - 1.25);
  }
  CHECK(fit_loglog_slope(x, y) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope({1.0}, {2.0}), DomainError);
}

TEST_CASE("order-2 remainders") {
  for (CheckKind kind : {CheckKind::NPrimeRemainder, CheckKind::FLeadingOrder}) {
    const AsymptoticReport coarse = run_check(kind, default_grid(kind, kBits), kCfg);
    REQUIRE(coarse.fitted_order.has_value());
    CHECK(coarse.grid.size() == 8);
    CHECK(coarse.observed.size() == coarse.grid.size());
    CHECK(coarse.pass);
    CHECK(coarse.tolerance_used == doctest::Approx(0.2));
    MESSAGE(to_string(kind) << " slope " << *coarse.fitted_order);

    const AsymptoticReport fine = run_check(kind, default_grid(kind, kBits, 2), kCfg);
    REQUIRE(fine.fitted_order.has_value());
    CHECK(std::abs(*fine.fitted_order - *coarse.fitted_order) < 0.05);
  }
}

TEST_CASE("bounded ratios") {
  const AsymptoticReport flog = run_check(CheckKind::FLog, default_grid(CheckKind::FLog, kBits), kCfg);
  CHECK(flog.pass);
  CHECK(flog.tolerance_used == doctest::Approx(kBoundedRatioLimit));
  CHECK_FALSE(flog.fitted_order.has_value());

  const std::vector<XReal> ys = powers_of_ten({-4, -6, -8, -10});
  const AsymptoticReport logf = run_check(CheckKind::LogFRemainder, ys, kCfg);
  CHECK(logf.pass);
  CHECK(logf.observed.size() == 4);
}

// F(z) <= exp(-1/(2z^2)) gives F^{-1}(y) >= (2 log(1/y))^{-1/2}: the stated
// upper bound fails at every point and the ratio tends to 1 from above.
TEST_CASE("FINV_BOUND reports the inequality as stated") {
  const AsymptoticReport r = run_check(CheckKind::FinvBound, powers_of_ten({-4, -6, -8}), kCfg);
  REQUIRE(r.observed.size() == 3);
  for (const XReal& ratio : r.observed) CHECK(ratio > 1L);
  CHECK_FALSE(r.pass);
  CHECK(r.tolerance_used == 0.0);
}

TEST_CASE("FINV_SHARP ratios approach 1 from above") {
  const AsymptoticReport r = run_check(CheckKind::FinvSharp, powers_of_ten({-4, -8, -12, -16}), kCfg);
  REQUIRE(r.observed.size() == 4);
  // mpmath: 1.465, 1.233, 1.159, 1.122.
  const double expected[] = {1.465, 1.233, 1.159, 1.122};
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.observed[i].to_double() == doctest::Approx(expected[i]).epsilon(1e-3));
  for (std::size_t i = 1; i < 4; ++i) CHECK(r.observed[i] < r.observed[i - 1]);
  CHECK(r.observed.back() >= R("0.9"));
  // Escalated precision below 1e-12.
  CHECK(r.grid[2].precision_bits() >= 1024);
  CHECK(r.grid[0].precision_bits() == kBits);
  CHECK_FALSE(r.pass);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(run_check(CheckKind::FLeadingOrder, {R("0.1"), R("0.6")}, kCfg), DomainError);
  CHECK_THROWS_AS(run_check(CheckKind::FLeadingOrder, {R("0.2"), R("0.1"), R("0.15")}, kCfg), DomainError);
  CHECK_THROWS_AS(run_check(CheckKind::FinvBound, {R("0.5")}, kCfg), DomainError);
  CHECK_THROWS_AS(run_check(CheckKind::FLog, {}, kCfg), DomainError);
  // A decreasing grid is accepted.
  CHECK(run_check(CheckKind::NPrimeRemainder, {R("0.3"), R("0.2"), R("0.1")}, kCfg).pass);
}

TEST_CASE("reports are deterministic") {
  const std::vector<XReal> grid = default_grid(CheckKind::FLeadingOrder, kBits);
  const AsymptoticReport a = run_check(CheckKind::FLeadingOrder, grid, kCfg);
  const AsymptoticReport b = run_check(CheckKind::FLeadingOrder, grid, kCfg);
  REQUIRE(a.observed.size() == b.observed.size());
  for (std::size_t i = 0; i < a.observed.size(); ++i) CHECK(a.observed[i].to_string() == b.observed[i].to_string());
  CHECK(*a.fitted_order == *b.fitted_order);
}
