#include "impvol/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace impvol {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// n points from lo to hi, equally spaced in log.
std::vector<XReal> log_spaced(const XReal& lo, const XReal& hi, int n) {
  const XReal a = log(lo);
  const XReal b = log(hi);
  std::vector<XReal> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : exp(a + (b - a) * static_cast<long>(i) / static_cast<long>(n - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<XReal> lin_spaced(const XReal& lo, const XReal& hi, int n) {
  std::vector<XReal> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<long>(i) / static_cast<long>(n - 1));
  return out;
}

XReal decimal_value(const char* text, int bits) { return XReal::from_string(text, bits); }

void finish(CriterionResult& r, Clock::time_point t0, double limit_seconds) {
  r.duration_seconds = seconds_since(t0);
  if (limit_seconds > 0) r.checks.push_back(check_within("c" + std::to_string(r.id) + ".duration_seconds", r.duration_seconds, 0, limit_seconds));
}

std::string prefix(int id, const std::string& name) { return "c" + std::to_string(id) + "." + name; }

ControlCase find_control(const std::string& name) {
  for (ControlCase& c : control_cases()) {
    if (c.name == name) return c;
  }
  throw DomainError("no control series named " + name);
}

}  // namespace

std::string_view to_string(SuiteLevel level) { return level == SuiteLevel::Fast ? "fast" : "full"; }

std::optional<SuiteLevel> parse_suite_level(std::string_view name) {
  if (name == "fast") return SuiteLevel::Fast;
  if (name == "full") return SuiteLevel::Full;
  return std::nullopt;
}

bool CriterionResult::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

CriterionResult criterion_pricer_equivalence(SuiteLevel level) {
  const auto t0 = Clock::now();
  CriterionResult r{1, "closed-form and Roper pricers agree", {}, {}, Json::object(), 0};
  const int bits = 256;
  PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  cfg.quad_rel_tol = 0x1p-120;
  const bool full = level == SuiteLevel::Full;
  const int n = full ? 10 : 4;
  const XReal one = XReal::one(bits);
  const auto moneyness = log_spaced(exp(XReal(-2L, bits)), exp(XReal(2L, bits)), n);
  const auto sigmas = log_spaced(decimal_value("0.05", bits), XReal(2L, bits), n);
  std::vector<XReal> maturities;
  for (const char* t : full ? std::vector<const char*>{"0.25", "0.5", "1", "2", "4"} : std::vector<const char*>{"0.25", "4"}) {
    maturities.push_back(decimal_value(t, bits));
  }
  XReal worst = XReal::zero(bits);
  long points = 0;
  for (const XReal& m : moneyness) {
    for (const XReal& s : sigmas) {
      for (const XReal& t : maturities) {
        const VolPoint p{m, one, t, s};
        const XReal gap = abs(bs_price(p) - bs_price_roper(p, cfg)) / p.spot;
        worst = max(worst, gap);
        ++points;
      }
    }
  }
  r.details["points"] = points;
  r.checks.push_back(check_le(prefix(1, "max_relative_gap"), worst, decimal_value("1e-30", bits)));
  finish(r, t0, 120);
  return r;
}

CriterionResult criterion_round_trip(SuiteLevel level) {
  const auto t0 = Clock::now();
  CriterionResult r{2, "implied_vol inverts bs_price", {}, {}, Json::object(), 0};
  const int bits = 256;
  const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  const bool full = level == SuiteLevel::Full;
  const auto logm = lin_spaced(XReal(-2L, bits), XReal(2L, bits), full ? 9 : 3);
  const auto sigmas = log_spaced(decimal_value("0.01", bits), XReal(5L, bits), full ? 10 : 3);
  const XReal one = XReal::one(bits);
  XReal worst = XReal::zero(bits);
  long recovered = 0;
  long failed = 0;
  Json failures = Json::array();
  for (const XReal& lm : logm) {
    for (const XReal& s : sigmas) {
      const VolPoint p{exp(lm), one, one, s};
      const XReal c = bs_price(p);
      try {
        const XReal back = implied_vol(Quote{p.spot, p.strike, p.maturity, c}, cfg);
        worst = max(worst, abs(back - s) / s);
        ++recovered;
      } catch (const std::exception& e) {
        ++failed;
        failures.push_back(Json{{"log_moneyness", decimal(lm, 6)}, {"sigma", decimal(s, 6)}, {"reason", e.what()}});
      }
    }
  }
  r.details["recovered"] = recovered;
  r.details["unrecovered"] = failures;
  if (failed > 0) {
    r.notes.push_back(std::to_string(failed) +
                      " quotes are indistinguishable from the intrinsic bound at 256 bits (time value below one ulp of the price)");
  }
  r.checks.push_back(check_le(prefix(2, "max_relative_error"), worst, decimal_value("1e-25", bits)));
  r.checks.push_back(check_count(prefix(2, "unrecovered_points"), failed, 0));
  finish(r, t0, 60);
  return r;
}

CriterionResult criterion_two_path_identity(SuiteLevel level) {
  const auto t0 = Clock::now();
  CriterionResult r{3, "sqrt(T) f(K) equals F_inv(K)", {}, {}, Json::object(), 0};
  const int bits = 256;
  const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  const XReal gap = decimal_value("1e-3", bits);
  const auto strikes = log_spaced(gap, 1L / XReal::e(bits) - gap, level == SuiteLevel::Full ? 20 : 5);
  XReal worst = XReal::zero(bits);
  for (const XReal& k : strikes) {
    const XReal inv = F_inv(k, cfg);
    for (long t : {1L, 4L}) {
      const XReal mat(t, bits);
      worst = max(worst, abs(sqrt(mat) * f_eval({k, mat}, cfg) - inv));
    }
  }
  r.details["strikes"] = static_cast<long>(strikes.size());
  r.checks.push_back(check_le(prefix(3, "max_gap"), worst, decimal_value("1e-20", bits)));
  finish(r, t0, 120);
  return r;
}

CriterionResult criterion_integral_identity(SuiteLevel) {
  const auto t0 = Clock::now();
  CriterionResult r{4, "integration-by-parts identity", {}, {}, Json::object(), 0};
  const int bits = 256;
  const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  for (const char* x : {"0.1", "0.3", "1"}) {
    const AsymptoticReport rep = check_int_identity(decimal_value(x, bits), cfg);
    r.checks.push_back(check_le(prefix(4, std::string("relative_gap_at_") + x), rep.observed.front(), decimal_value("1e-30", bits)));
  }
  finish(r, t0, 0);
  return r;
}

CriterionResult criterion_asymptotic_orders(SuiteLevel) {
  const auto t0 = Clock::now();
  CriterionResult r{5, "asymptotic orders of N' and F", {}, {}, Json::object(), 0};
  const int bits = 256;
  const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  for (CheckKind kind : {CheckKind::NPrimeRemainder, CheckKind::FLeadingOrder}) {
    const AsymptoticReport rep = run_check(kind, default_grid(kind, bits), cfg);
    const std::string name = std::string(to_string(kind));
    r.details[name] = to_json(rep);
    r.checks.push_back(check_within(prefix(5, name + ".slope"), rep.fitted_order.value_or(NAN), 2.0, 0.2));
  }

  // F_inv(y) < (2 log(1/y))^{-1/2} strictly at every grid point.
  const auto ys = default_grid(CheckKind::FinvBound, bits);
  const AsymptoticReport bound = run_check(CheckKind::FinvBound, ys, cfg);
  r.details["FINV_BOUND"] = to_json(bound);
  long violations = static_cast<long>(bound.dropped.size());
  for (const XReal& ratio : bound.observed) violations += ratio < 1L ? 0 : 1;
  r.checks.push_back(check_count(prefix(5, "FINV_BOUND.violations"), violations, 0));

  const AsymptoticReport sharp = run_check(CheckKind::FinvSharp, default_grid(CheckKind::FinvSharp, bits), cfg);
  r.details["FINV_SHARP"] = to_json(sharp);
  std::vector<std::size_t> order(sharp.grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sharp.grid[a] > sharp.grid[b]; });
  bool up = true;
  bool down = true;
  for (std::size_t i = 1; i < order.size(); ++i) {
    up = up && sharp.observed[order[i]] >= sharp.observed[order[i - 1]];
    down = down && sharp.observed[order[i]] <= sharp.observed[order[i - 1]];
  }
  r.checks.push_back(check_equal(prefix(5, "FINV_SHARP.monotone"), (up || down) && sharp.dropped.empty() ? "yes" : "no", "yes"));
  const XReal smallest_y = decimal_value("1e-16", 1024);
  bool at_end = !order.empty() && abs(sharp.grid[order.back()] - smallest_y) <= smallest_y * XReal::pow2(-60, 1024);
  r.checks.push_back(at_end ? check_ge(prefix(5, "FINV_SHARP.ratio_at_1e-16"), sharp.observed[order.back()], decimal_value("0.9", bits))
                            : check_equal(prefix(5, "FINV_SHARP.ratio_at_1e-16"), "missing", "present"));
  finish(r, t0, 180);
  return r;
}

CriterionResult criterion_series_pipelines(SuiteLevel level) {
  const auto t0 = Clock::now();
  CriterionResult r{6, "substituted trivariate series equals the direct series of f", {}, {}, Json::object(), 0};
  const bool full = level == SuiteLevel::Full;
  const int bits = full ? 512 : 256;
  const int degree = full ? 8 : 6;
  const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
  const XReal one = XReal::one(bits);
  const PowerSeries via_tri = substitute_specialize(tri_series_I(degree, one, cfg), 5);
  const PowerSeries direct = series_f_direct(5, one, cfg);
  XReal worst = XReal::zero(bits);
  for (int k = 0; k <= 5; ++k) worst = max(worst, abs(via_tri.coeffs[static_cast<std::size_t>(k)] - direct.coeffs[static_cast<std::size_t>(k)]));
  r.details["total_degree"] = degree;
  r.details["bits"] = bits;
  r.checks.push_back(check_le(prefix(6, "max_coefficient_gap"), worst, decimal_value("1e-30", bits)));
  finish(r, t0, 300);
  return r;
}

CriterionResult criterion_positive_controls(SuiteLevel) {
  const auto t0 = Clock::now();
  CriterionResult r{7, "guesser recovers the positive controls", {}, {}, Json::object(), 0};
  GuessConfig cfg;
  cfg.working_bits = 512;
  for (const char* name : {"exp", "log(1+x)", "sqrt(1+x)", "erf-type", "exp(x)*sqrt(1+x)"}) {
    ControlCase c = find_control(name);
    GuessConfig local = cfg;
    local.n_coeffs = c.n_coeffs;
    const GuessReport rep = guess_ode(c.source, local);
    r.details[name] = to_json(rep);
    r.checks.push_back(check_equal(prefix(7, std::string(name) + ".status"), std::string(to_string(rep.status)), "FOUND"));
    const bool exact = rep.exact && rep.exact->relation && rep.exact->relation->exact && c.known &&
                       same_relation(*rep.exact->relation->exact, *c.known);
    r.checks.push_back(check_equal(prefix(7, std::string(name) + ".exact_relation"), exact ? "known" : "other", "known"));
    if (rep.candidate) {
      r.checks.push_back(check_le(prefix(7, std::string(name) + ".residual"), rep.candidate->residual, XReal::pow2(-240, 512)));
    } else {
      r.checks.push_back(check_equal(prefix(7, std::string(name) + ".residual"), "no candidate", "candidate"));
    }
  }
  finish(r, t0, 0);
  return r;
}

CriterionResult criterion_negative_evidence(SuiteLevel level) {
  const auto t0 = Clock::now();
  CriterionResult r{8, "guesser finds no relation for tan, exp(exp), f, F_inv", {}, {}, Json::object(), 0};
  const bool full = level == SuiteLevel::Full;
  const int bits = 512;
  GuessConfig cfg;
  cfg.working_bits = bits;
  cfg.r_max = full ? 6 : 3;
  cfg.d_max = full ? 6 : 3;
  std::vector<std::pair<std::string, SeriesSource>> cases;
  std::vector<int> sizes;
  for (const char* name : {"tan", "exp(exp(x))-e"}) {
    ControlCase c = find_control(name);
    cases.emplace_back(name, c.source);
    sizes.push_back(c.n_coeffs);
  }
  cases.emplace_back("f", f_series_source(64, XReal::one(bits)));
  sizes.push_back(64);
  cases.emplace_back("F_inv", finv_series_source(64));
  sizes.push_back(64);

  for (std::size_t k = 0; k < cases.size(); ++k) {
    const std::string& name = cases[k].first;
    GuessConfig local = cfg;
    local.n_coeffs = sizes[k];
    try {
      const GuessReport rep = guess_ode(cases[k].second, local);
      r.details[name] = to_json(rep);
      XReal smallest = XReal::one(bits);
      long escalated = 0;
      for (const LatticeCell& cell : rep.cells) {
        smallest = min(smallest, cell.min_singular_ratio);
        if (cell.bits_used > bits) ++escalated;
      }
      r.checks.push_back(check_equal(prefix(8, name + ".status"), std::string(to_string(rep.status)), "NONE_UP_TO_BOUNDS"));
      r.checks.push_back(check_ge(prefix(8, name + ".min_singular_ratio"), XReal(smallest, bits), XReal::pow2(-64, bits)));
      r.checks.push_back(check_count(prefix(8, name + ".indeterminate_cells_at_512_bits"), escalated, 0));
      if (escalated > 0) {
        r.notes.push_back(name + ": " + std::to_string(escalated) +
                          " cells were indeterminate at 512 bits and were settled by escalation");
      }
    } catch (const PrecisionExhausted& e) {
      r.details[name] = Json{{"error", e.what()}, {"required_bits", e.required_bits()}};
      r.checks.push_back(check_equal(prefix(8, name + ".status"), "PRECISION_EXHAUSTED", "NONE_UP_TO_BOUNDS"));
    }
  }
  finish(r, t0, 600);
  return r;
}

std::vector<CriterionResult> run_suite(SuiteLevel level, const Progress& progress) {
  using Fn = CriterionResult (*)(SuiteLevel);
  const Fn steps[] = {criterion_pricer_equivalence, criterion_round_trip,       criterion_two_path_identity,
                      criterion_integral_identity,  criterion_asymptotic_orders, criterion_series_pipelines,
                      criterion_positive_controls,  criterion_negative_evidence};
  std::vector<CriterionResult> out;
  for (Fn step : steps) {
    out.push_back(step(level));
    if (progress) {
      const CriterionResult& c = out.back();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", c.duration_seconds);
      progress("criterion " + std::to_string(c.id) + " " + (c.pass() ? "PASS" : "FAIL") + " (" + buf + " s): " + c.title);
    }
  }
  return out;
}

Report suite_report(const std::vector<CriterionResult>& results, SuiteLevel level) {
  Report rep;
  rep.kind = "suite";
  rep.inputs["level"] = std::string(to_string(level));
  Json criteria = Json::array();
  bool all = true;
  for (const CriterionResult& c : results) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", c.duration_seconds);
    criteria.push_back(Json{{"id", c.id},
                            {"title", c.title},
                            {"pass", c.pass()},
                            {"duration_seconds", buf},
                            {"notes", c.notes},
                            {"details", c.details}});
    all = all && c.pass();
    rep.checks.insert(rep.checks.end(), c.checks.begin(), c.checks.end());
  }
  rep.outputs["criteria"] = std::move(criteria);
  rep.outputs["pass"] = all;
  return rep;
}

}  // namespace impvol
