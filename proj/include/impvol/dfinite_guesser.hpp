#pragma once

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "impvol/series_engine.hpp"

namespace impvol {

/// Raised when a lattice cell stays between the accept and reject thresholds
/// at every precision the series can be produced at.
class PrecisionExhausted : public NumericalError {
 public:
  PrecisionExhausted(const std::string& what, int required_bits)
      : NumericalError(what), required_bits_(required_bits) {}
  int required_bits() const { return required_bits_; }

 private:
  int required_bits_;
};

inline constexpr int kGuardRows = 10;

struct GuessConfig {
  int r_max = 6;
  int d_max = 6;
  int n_coeffs = 64;
  int working_bits = 512;
  double holdout_fraction = 0.1;
  /// Largest precision escalation may reach (also capped by the series).
  int max_bits = 4096;

  /// Thresholds of the three-zone rule, derived from the working precision.
  XReal accept_ratio(int bits) const { return XReal::pow2(-(bits / 2), bits); }
  XReal reject_ratio(int bits) const { return XReal::pow2(-(bits / 8), bits); }
  XReal holdout_tolerance(int bits) const { return XReal::pow2(-(bits / 4), bits); }

  void validate() const;
};

/// sum_{i<=r} P_i(x) y^(i)(x) = 0 with P_i = sum_{j<=d} poly_coeffs[i][j] x^j.
struct OdeCandidate {
  int r = 1;
  int d = 0;
  std::vector<std::vector<XReal>> poly_coeffs;
  /// Row-relative residual on the held-out equations.
  XReal residual;
  /// Number of leading equations used for the fit; verification starts here.
  int fit_rows = 0;
  /// Exact coefficients when found by the rational path.
  std::optional<std::vector<std::vector<mpq_class>>> exact;
};

enum class GuessStatus { Found, NoneUpToBounds, Inconclusive };
enum class CellVerdict { None, Accept, Indeterminate, HoldoutFailed, Underdetermined };

std::string_view to_string(GuessStatus s);
std::string_view to_string(CellVerdict v);

struct LatticeCell {
  int r = 0;
  int d = 0;
  int unknowns = 0;
  int fit_rows = 0;
  int holdout_rows = 0;
  XReal min_singular_ratio;
  CellVerdict verdict = CellVerdict::Indeterminate;
  int bits_used = 0;
};

struct ExactResult {
  /// Cells whose matrix has full column rank over Q (certified by a prime).
  int certified_full_rank = 0;
  std::optional<OdeCandidate> relation;
};

struct GuessReport {
  GuessStatus status = GuessStatus::Inconclusive;
  std::vector<LatticeCell> cells;
  std::optional<OdeCandidate> candidate;
  GuessConfig config;
  int series_bits = 0;
  std::optional<ExactResult> exact;
  std::string note;
};

/// Series data for the guesser. at_bits regenerates the coefficients at a
/// requested precision for escalation; rational is set when the coefficients
/// are exactly known rationals.
struct SeriesSource {
  std::string name;
  std::function<PowerSeries(int bits)> at_bits;
  std::optional<std::vector<mpq_class>> rational;
  /// Largest precision at_bits can honour; 0 means unlimited.
  int max_bits = 0;
};

GuessReport guess_ode(const SeriesSource& source, const GuessConfig& cfg);
/// Float path only; escalation is capped at the series' own precision.
GuessReport guess_ode(const PowerSeries& s, const GuessConfig& cfg);

/// Max |coefficient of sum P_i s^(i)| over the equations after c.fit_rows,
/// each normalized by the largest |coefficient of s| entering that equation.
XReal verify_relation(const PowerSeries& s, const OdeCandidate& c);

// Control series with rational coefficients, first n terms.
std::vector<mpq_class> rational_exp(int n);
std::vector<mpq_class> rational_log1p(int n);
std::vector<mpq_class> rational_sqrt1p(int n);
/// Antiderivative of exp(-x^2) vanishing at 0.
std::vector<mpq_class> rational_erf_type(int n);
std::vector<mpq_class> rational_exp_sqrt1p(int n);
std::vector<mpq_class> rational_tan(int n);
/// (exp(exp(x)) - e) / e = sum_{k>=1} Bell_k x^k / k!.
std::vector<mpq_class> rational_exp_exp_reduced(int n);

PowerSeries series_from_rational(const std::vector<mpq_class>& coeffs, int bits);

/// f at K = 1/(2e) via series_f_direct, regenerated at any precision.
SeriesSource f_series_source(int n_coeffs, const XReal& maturity);
/// F^{-1} at 1/(2e) by reversing the Taylor series of F at F^{-1}(1/(2e)).
SeriesSource finv_series_source(int n_coeffs);

struct ControlCase {
  std::string name;
  SeriesSource source;
  GuessStatus expected = GuessStatus::Found;
  /// Known minimal relation for positive controls, integer coefficients.
  std::optional<std::vector<std::vector<long>>> known;
  int n_coeffs = 60;
};

/// exp, log(1+x), sqrt(1+x), erf-type, exp(x) sqrt(1+x) (FOUND) and tan,
/// exp(exp(x)) - e (NONE_UP_TO_BOUNDS).
std::vector<ControlCase> control_cases();

struct ControlOutcome {
  std::string name;
  GuessStatus expected;
  GuessReport report;
  bool pass = false;
  std::string reason;
};

struct ControlSuiteReport {
  std::vector<ControlOutcome> outcomes;
  bool pass = false;
};

/// Runs guess_ode over control_cases() with cfg's lattice bounds and
/// precision; each case uses its own n_coeffs.
ControlSuiteReport control_suite(const GuessConfig& cfg);

/// True when the exact relation equals `known` up to a nonzero rational factor.
bool same_relation(const std::vector<std::vector<mpq_class>>& exact, const std::vector<std::vector<long>>& known);

}  // namespace impvol
