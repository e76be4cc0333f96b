#include "impvol/precision_core.hpp"

namespace impvol {

RootResult solve_monotone_detailed(const MonotoneFunction& g, const XReal& target, const XReal& lo_in,
                                   const XReal& hi_in, const PrecisionConfig& cfg,
                                   const std::optional<XReal>& guess) {
  cfg.validate();
  const int bits = cfg.working_bits;
  if (!(lo_in < hi_in)) throw DomainError("solve_monotone: requires lo < hi");
  XReal lo(lo_in, bits);
  XReal hi(hi_in, bits);
  const XReal goal(target, bits);
  const XReal tol = cfg.root_tol();

  const XReal f_lo = g.value(lo) - goal;
  if (f_lo.is_zero()) return {lo, f_lo, 0};
  const XReal f_hi = g.value(hi) - goal;
  if (f_hi.is_zero()) return {hi, f_hi, 0};
  if (f_lo.sign() == f_hi.sign()) {
    throw DomainError("solve_monotone: target " + goal.to_string(20) + " outside [g(lo), g(hi)] = [" +
                      (f_lo + goal).to_string(20) + ", " + (f_hi + goal).to_string(20) + "]");
  }
  const bool increasing = f_lo.sign() < 0;

  XReal x = (guess && *guess > lo && *guess < hi) ? XReal(*guess, bits) : ldexp(lo + hi, -1);
  XReal step_old = hi - lo;
  XReal step = step_old;
  const int max_iter = 4 * bits + 200;

  for (int iter = 1; iter <= max_iter; ++iter) {
    const XReal fx = g.value(x) - goal;
    if (fx.is_zero()) return {x, fx, iter};
    if ((fx.sign() < 0) == increasing) {
      lo = x;
    } else {
      hi = x;
    }

    bool bisect = true;
    XReal next;
    if (g.derivative) {
      const XReal dfx = g.derivative(x);
      if (!dfx.is_zero()) {
        next = x - fx / dfx;
        // Reject Newton when it leaves the bracket or fails to halve the
        // previous-but-one step.
        const bool inside = next > lo && next < hi;
        const bool fast = abs(ldexp(x - next, 1)) <= abs(step_old);
        bisect = !(inside && fast);
      }
    }
    if (bisect) next = ldexp(lo + hi, -1);
    step_old = step;
    step = next - x;

    const XReal scale = max(XReal::one(bits), abs(next));
    if (abs(step) <= tol * scale || (hi - lo) <= tol * scale) {
      const XReal residual = g.value(next) - goal;
      return {next, residual, iter};
    }
    x = std::move(next);
  }
  throw NumericalError("solve_monotone: no convergence after " + std::to_string(max_iter) + " iterations");
}

XReal solve_monotone(const MonotoneFunction& g, const XReal& target, const XReal& lo, const XReal& hi,
                     const PrecisionConfig& cfg) {
  return solve_monotone_detailed(g, target, lo, hi, cfg).root;
}

}  // namespace impvol
