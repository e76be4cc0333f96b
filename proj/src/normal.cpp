#include <cmath>

#include "impvol/precision_core.hpp"

namespace impvol {

XReal norm_pdf(const XReal& x) {
  const int bits = x.precision_bits();
  const XReal half_sq = ldexp(x * x, -1);
  XReal value = exp(-half_sq) / sqrt(ldexp(XReal::pi(bits), 1));
  if (value.is_zero()) {
    // Underflow is only acceptable far below the working resolution.
    const double log2_true = -half_sq.to_double() / std::log(2.0);
    if (log2_true > -4.0 * bits) {
      throw NumericalError("norm_pdf underflow at x = " + x.to_string(20));
    }
  }
  return value;
}

XReal norm_cdf(const XReal& x) {
  const int bits = x.precision_bits();
  return ldexp(erfc(-x / sqrt(XReal(2, bits))), -1);
}

}  // namespace impvol
