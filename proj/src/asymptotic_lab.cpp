#include "impvol/asymptotic_lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace impvol {

namespace {

constexpr std::array<std::pair<CheckKind, std::string_view>, 7> kNames{{
    {CheckKind::NPrimeRemainder, "N_PRIME_REMAINDER"},
    {CheckKind::FLeadingOrder, "F_LEADING_ORDER"},
    {CheckKind::FLog, "F_LOG"},
    {CheckKind::FinvBound, "FINV_BOUND"},
    {CheckKind::LogFRemainder, "LOGF_REMAINDER"},
    {CheckKind::FinvSharp, "FINV_SHARP"},
    {CheckKind::IntIdentity, "INT_IDENTITY"},
}};

constexpr double kSlopeTarget = 2.0;
constexpr double kSlopeBand = 0.2;

// (2 e pi)^{-1/2}
XReal leading_constant(int bits) {
  return 1L / sqrt(ldexp(XReal::e(bits) * XReal::pi(bits), 1));
}

PrecisionConfig config_for_point(CheckKind kind, const XReal& at, const PrecisionConfig& cfg) {
  if (is_inverse_kind(kind) && at <= XReal::from_string("1e-12", at.precision_bits()) && cfg.working_bits < 1024) {
    return PrecisionConfig::for_bits(1024);
  }
  return cfg;
}

void validate_grid(CheckKind kind, const std::vector<XReal>& grid) {
  if (grid.empty()) throw DomainError(std::string(to_string(kind)) + ": empty grid");
  const bool up = grid.size() < 2 || grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1])) {
      throw DomainError(std::string(to_string(kind)) + ": grid must be strictly monotone");
    }
  }
  for (const XReal& g : grid) {
    const int bits = g.precision_bits();
    if (kind == CheckKind::IntIdentity) {
      if (!(g > 0L) || g > 1L) throw DomainError("INT_IDENTITY: grid point " + g.to_string(20) + " outside (0, 1]");
    } else if (is_inverse_kind(kind)) {
      if (!(g > 0L) || !(g < 1L / XReal::e(bits))) {
        throw DomainError(std::string(to_string(kind)) + ": grid point " + g.to_string(20) + " outside (0, 1/e)");
      }
    } else if (!(g > 0L) || !(g < XReal(0.5, bits))) {
      throw DomainError(std::string(to_string(kind)) + ": grid point " + g.to_string(20) + " outside (0, 0.5)");
    }
  }
}

XReal observe(CheckKind kind, const XReal& at, const PrecisionConfig& cfg) {
  const int bits = cfg.working_bits;
  const XReal a(at, bits);
  switch (kind) {
    case CheckKind::NPrimeRemainder: {
      const XReal approx = leading_constant(bits) * exp(-1L / ldexp(a * a, 1));
      return abs(F_derivative(a) / approx - 1L);
    }
    case CheckKind::FLeadingOrder:
      return abs(F_eval(a, cfg) / F_leading(a) - 1L);
    case CheckKind::FLog:
      return abs(-log(F_eval(a, cfg)) - 1L / ldexp(a * a, 1)) / log(1L / a);
    case CheckKind::FinvBound:
    case CheckKind::FinvSharp:
      return F_inv(a, cfg) * sqrt(ldexp(log(1L / a), 1));
    case CheckKind::LogFRemainder: {
      const XReal x = F_inv(a, cfg);
      const XReal log_inv = log(1L / a);
      return abs(log_inv - 1L / ldexp(x * x, 1)) / log(log_inv);
    }
    case CheckKind::IntIdentity:
      break;
  }
  throw DomainError("observe: unsupported kind");
}

std::optional<double> slope_of(const std::vector<XReal>& grid, const std::vector<XReal>& observed) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(observed[i] > 0L)) continue;
    lx.push_back(log(grid[i]).to_double());
    ly.push_back(log(observed[i]).to_double());
  }
  if (lx.size() < 3) return std::nullopt;
  return fit_loglog_slope(lx, ly);
}

}  // namespace

std::string_view to_string(CheckKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "UNKNOWN";
}

std::optional<CheckKind> parse_check_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool is_inverse_kind(CheckKind kind) {
  return kind == CheckKind::FinvBound || kind == CheckKind::LogFRemainder || kind == CheckKind::FinvSharp;
}

XReal F_leading(const XReal& x) {
  if (!(x > 0L)) throw DomainError("F_leading: x must be positive");
  return x * x * x * leading_constant(x.precision_bits()) * exp(-1L / ldexp(x * x, 1));
}

AsymptoticReport check_int_identity(const XReal& x_in, const PrecisionConfig& cfg) {
  cfg.validate();
  const int bits = cfg.working_bits;
  const XReal x(x_in, bits);
  if (!(x > 0L) || x > 1L) throw DomainError("check_int_identity: x = " + x.to_string(20) + " outside (0, 1]");
  const XReal inv_sqrt_two_pi = 1L / sqrt(ldexp(XReal::pi(bits), 1));

  XReal integral;
  if (x * kRoperPeakRatio < 1L) {
    // Same peak at the upper endpoint as F; integrate in u = 1/v.
    integral = integrate_upper([](const XReal& u) { return exp(-ldexp(u * u, -1)) / (u * u); }, 1L / x, cfg);
  } else {
    integral = integrate([](const XReal& v) { return exp(-1L / ldexp(v * v, 1)); }, XReal::zero(bits), x, cfg);
  }
  const XReal lhs = inv_sqrt_two_pi * integral;
  // -1 + N(1/x) written as -N(-1/x) to avoid cancellation.
  const XReal rhs = x * inv_sqrt_two_pi * exp(-1L / ldexp(x * x, 1)) - norm_cdf(-1L / x);

  AsymptoticReport report;
  report.kind = CheckKind::IntIdentity;
  report.grid = {x};
  report.observed = {abs(lhs - rhs) / abs(rhs)};
  report.tolerance_used = (8L * cfg.quad_tol()).to_double();
  report.pass = lhs > 0L && rhs > 0L && abs(lhs - rhs) <= 8L * cfg.quad_tol() * abs(rhs);
  return report;
}

AsymptoticReport run_check(CheckKind kind, const std::vector<XReal>& grid, const PrecisionConfig& cfg) {
  cfg.validate();
  validate_grid(kind, grid);

  if (kind == CheckKind::IntIdentity) {
    AsymptoticReport report;
    report.kind = kind;
    report.pass = true;
    for (const XReal& x : grid) {
      const AsymptoticReport one = check_int_identity(x, cfg);
      report.grid.push_back(one.grid.front());
      report.observed.push_back(one.observed.front());
      report.tolerance_used = one.tolerance_used;
      report.pass = report.pass && one.pass;
    }
    return report;
  }

  AsymptoticReport report;
  report.kind = kind;
  for (const XReal& g : grid) {
    const PrecisionConfig local = config_for_point(kind, g, cfg);
    try {
      XReal value = observe(kind, g, local);
      report.grid.emplace_back(g, local.working_bits);
      report.observed.push_back(std::move(value));
    } catch (const NumericalError& e) {
      report.dropped.push_back({g, e.what()});
    }
  }
  const std::size_t n = report.grid.size();
  if (n == 0) return report;

  switch (kind) {
    case CheckKind::NPrimeRemainder:
    case CheckKind::FLeadingOrder:
      report.tolerance_used = kSlopeBand;
      report.fitted_order = slope_of(report.grid, report.observed);
      report.pass = report.fitted_order && std::abs(*report.fitted_order - kSlopeTarget) <= kSlopeBand;
      break;
    case CheckKind::FLog:
    case CheckKind::LogFRemainder:
      report.tolerance_used = kBoundedRatioLimit;
      report.pass = std::all_of(report.observed.begin(), report.observed.end(),
                                [](const XReal& r) { return r <= XReal(kBoundedRatioLimit, r.precision_bits()); });
      break;
    case CheckKind::FinvBound:
      // No tolerance: F_inv(y) <= (2 log(1/y))^{-1/2} means ratio <= 1.
      report.tolerance_used = 0;
      report.pass = std::all_of(report.observed.begin(), report.observed.end(),
                                [](const XReal& r) { return r <= 1L; });
      break;
    case CheckKind::FinvSharp: {
      report.tolerance_used = 0.9;
      // Walk toward 0, i.e. by decreasing y.
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return report.grid[a] > report.grid[b]; });
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        const XReal& r = report.observed[order[i]];
        ok = ok && r > 0L && r <= 1L;
        if (i > 0) ok = ok && r >= report.observed[order[i - 1]];
      }
      ok = ok && report.observed[order.back()] >= XReal(0.9, report.observed[order.back()].precision_bits());
      report.pass = ok;
      break;
    }
    case CheckKind::IntIdentity:
      break;
  }
  return report;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_loglog_slope: need two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0;
  double sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) throw DomainError("fit_loglog_slope: abscissae are all equal");
  return sxy / sxx;
}

std::vector<XReal> default_grid(CheckKind kind, int bits, int density) {
  if (density < 1) throw DomainError("default_grid: density must be >= 1");
  std::vector<XReal> grid;
  if (is_inverse_kind(kind)) {
    // y = 10^-4 down to 10^-16, refined in the exponent.
    const int steps = 12 * density;
    for (int i = 0; i <= steps; ++i) {
      const XReal exponent = XReal(-4, bits) - XReal(12 * i, bits) / static_cast<long>(steps);
      grid.push_back(exp(exponent * log(XReal(10, bits))));
    }
    return grid;
  }
  if (kind == CheckKind::IntIdentity) {
    for (const char* x : {"0.1", "0.3", "1"}) grid.push_back(XReal::from_string(x, bits));
    return grid;
  }
  const int steps = 7 * density;
  const XReal lo = log(XReal::from_string("0.05", bits));
  const XReal hi = log(XReal::from_string("0.3", bits));
  for (int i = 0; i <= steps; ++i) grid.push_back(exp(lo + (hi - lo) * XReal(i, bits) / static_cast<long>(steps)));
  return grid;
}

}  // namespace impvol
