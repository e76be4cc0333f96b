#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "impvol/implied_surface.hpp"

namespace impvol {

enum class CheckKind {
  NPrimeRemainder,
  FLeadingOrder,
  FLog,
  FinvBound,
  LogFRemainder,
  FinvSharp,
  IntIdentity,
};

std::string_view to_string(CheckKind kind);
/// Accepts the upper-case identifiers produced by to_string.
std::optional<CheckKind> parse_check_kind(std::string_view name);
/// Kinds whose grid is a set of y in (0, 1/e) rather than x in (0, 0.5).
bool is_inverse_kind(CheckKind kind);

struct DroppedPoint {
  XReal abscissa;
  std::string reason;
};

struct AsymptoticReport {
  CheckKind kind = CheckKind::NPrimeRemainder;
  std::vector<XReal> grid;
  std::vector<XReal> observed;
  std::optional<double> fitted_order;
  bool pass = false;
  double tolerance_used = 0;
  std::vector<DroppedPoint> dropped;
};

/// Upper bound C used for the bounded-ratio kinds F_LOG and LOGF_REMAINDER.
inline constexpr double kBoundedRatioLimit = 10.0;
/// Inverse-kind points with y at or below this use at least 1024 bits.
inline constexpr double kEscalateBelow = 1e-12;

/// x^3 / sqrt(2 e pi) * exp(-1/(2x^2)).
XReal F_leading(const XReal& x);

/// (2 pi)^{-1/2} int_0^x exp(-1/(2v^2)) dv against x (2 pi)^{-1/2} exp(-1/(2x^2)) - N(-1/x).
AsymptoticReport check_int_identity(const XReal& x, const PrecisionConfig& cfg);

AsymptoticReport run_check(CheckKind kind, const std::vector<XReal>& grid, const PrecisionConfig& cfg);

/// Least-squares slope of log y against log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// The grids used by the acceptance checks: 8 log-spaced x in [0.05, 0.3], or
/// y = 10^-4, ..., 10^-16.
std::vector<XReal> default_grid(CheckKind kind, int bits, int density = 1);

}  // namespace impvol
