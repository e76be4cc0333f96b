#pragma once

#include <functional>
#include <optional>

#include "impvol/xreal.hpp"

namespace impvol {

/// Standard normal density, at the precision of `x`.
XReal norm_pdf(const XReal& x);

/// Standard normal distribution function, evaluated through erfc so that
/// both tails keep full relative precision.
XReal norm_cdf(const XReal& x);

using RealFunction = std::function<XReal(const XReal&)>;

/// Raised when the quadrature exhausts its level budget. Carries the last
/// estimate and the achieved error estimate.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, XReal estimate, XReal error)
      : NumericalError(what), estimate_(std::move(estimate)), error_(std::move(error)) {}
  const XReal& estimate() const { return estimate_; }
  const XReal& error() const { return error_; }

 private:
  XReal estimate_;
  XReal error_;
};

struct QuadratureResult {
  XReal value;
  XReal error_estimate;  // difference between the last two levels
  int levels = 0;
  long evaluations = 0;
};

// Double-exponential quadrature. The integrand is never evaluated at an
// endpoint; nodes that round onto an endpoint are dropped. Convergence is
// declared when two successive step halvings agree to
//   quad_rel_tol * max(|I|, 2^(-bits/2) * integral of |f|).

QuadratureResult integrate_detailed(const RealFunction& f, const XReal& lo, const XReal& hi,
                                    const PrecisionConfig& cfg);
XReal integrate(const RealFunction& f, const XReal& lo, const XReal& hi, const PrecisionConfig& cfg);

/// Integral over [lo, +inf) (exp-sinh transform).
QuadratureResult integrate_upper_detailed(const RealFunction& f, const XReal& lo, const PrecisionConfig& cfg);
XReal integrate_upper(const RealFunction& f, const XReal& lo, const PrecisionConfig& cfg);

/// Integral over the whole real line (sinh-sinh transform).
XReal integrate_real_line(const RealFunction& f, const PrecisionConfig& cfg);

/// A strictly monotone function with an optional derivative. When the
/// derivative is empty the solver falls back to pure bisection.
struct MonotoneFunction {
  RealFunction value;
  RealFunction derivative;
};

struct RootResult {
  XReal root;
  XReal residual;  // g(root) - target
  int iterations = 0;
};

/// Newton iteration safeguarded by bisection; the bracket [lo, hi] is
/// maintained throughout. Stops when |dx| <= root_rel_tol * max(1, |x|).
/// Throws DomainError when target is not bracketed by g(lo), g(hi).
RootResult solve_monotone_detailed(const MonotoneFunction& g, const XReal& target, const XReal& lo,
                                   const XReal& hi, const PrecisionConfig& cfg,
                                   const std::optional<XReal>& guess = std::nullopt);
XReal solve_monotone(const MonotoneFunction& g, const XReal& target, const XReal& lo, const XReal& hi,
                     const PrecisionConfig& cfg);

}  // namespace impvol
