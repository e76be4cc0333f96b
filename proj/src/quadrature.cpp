#include <cmath>
#include <optional>

#include "impvol/precision_core.hpp"

namespace impvol {

namespace {

struct Node {
  XReal x;
  XReal w;
};

// Abscissa/weight pair for +t and -t of a double-exponential map. A side is
// empty when its abscissa rounds onto an endpoint.
struct NodePair {
  std::optional<Node> plus;
  std::optional<Node> minus;
};

using Transform = std::function<NodePair(const XReal& t)>;

QuadratureResult de_integrate(const RealFunction& f, const Transform& transform, double t_max,
                              const PrecisionConfig& cfg, const char* name) {
  cfg.validate();
  const int bits = cfg.working_bits;
  const XReal stop_ratio = XReal::pow2(-(bits + 8), bits);
  const XReal tol = cfg.quad_tol();
  const XReal abs_floor = XReal::pow2(-(bits / 2), bits);

  XReal sum = XReal::zero(bits);
  XReal abs_sum = XReal::zero(bits);
  long evaluations = 0;

  auto add_term = [&](const Node& node) -> XReal {
    XReal term = node.w * f(node.x);
    ++evaluations;
    sum += term;
    abs_sum += abs(term);
    return term;
  };

  // Walks t = (first + 2j) * 2^-level on both sides until each side dies out.
  auto walk = [&](int level, long first, long stride) {
    bool plus_alive = true;
    bool minus_alive = true;
    for (long k = first; plus_alive || minus_alive; k += stride) {
      const double t_d = std::ldexp(static_cast<double>(k), -level);
      if (t_d > t_max) break;
      const XReal t = ldexp(XReal(k, bits), -level);
      const NodePair nodes = transform(t);
      if (plus_alive) {
        if (!nodes.plus) {
          plus_alive = false;
        } else {
          const XReal term = add_term(*nodes.plus);
          if (t_d >= 1.0 && abs(term) <= stop_ratio * abs(sum)) plus_alive = false;
        }
      }
      if (minus_alive) {
        if (!nodes.minus) {
          minus_alive = false;
        } else {
          const XReal term = add_term(*nodes.minus);
          if (t_d >= 1.0 && abs(term) <= stop_ratio * abs(sum)) minus_alive = false;
        }
      }
    }
  };

  const NodePair center = transform(XReal::zero(bits));
  if (center.plus) add_term(*center.plus);
  walk(0, 1, 1);

  XReal estimate = sum;
  XReal diff = abs(estimate);
  for (int level = 1; level <= cfg.quad_max_level; ++level) {
    walk(level, 1, 2);
    XReal next = ldexp(sum, -level);
    diff = abs(next - estimate);
    estimate = std::move(next);
    if (level >= 3) {
      const XReal scale = max(abs(estimate), abs_floor * ldexp(abs_sum, -level));
      if (diff <= tol * scale) {
        return QuadratureResult{estimate, diff, level, evaluations};
      }
    }
  }
  throw QuadratureError(std::string(name) + ": no convergence within level budget (estimate " +
                            estimate.to_string(20) + ", error " + diff.to_string(6) + ")",
                        estimate, diff);
}

double t_limit(int bits, double factor) {
  return std::asinh(factor * bits * std::log(2.0) / M_PI) + 0.5;
}

}  // namespace

QuadratureResult integrate_detailed(const RealFunction& f, const XReal& lo, const XReal& hi,
                                    const PrecisionConfig& cfg) {
  if (!(lo < hi)) throw DomainError("integrate: requires lo < hi");
  const int bits = cfg.working_bits;
  const XReal a(lo, bits);
  const XReal b(hi, bits);
  const XReal half_pi = ldexp(XReal::pi(bits), -1);
  const XReal radius = ldexp(b - a, -1);
  const XReal width = b - a;

  // x = c + r tanh(u), u = (pi/2) sinh t. With d = 1 / (1 + e^{2u}) the
  // distance to the nearer endpoint is (b - a) d, computed without
  // cancellation.
  Transform tanh_sinh = [&](const XReal& t) {
    const XReal u = half_pi * sinh(t);
    const XReal ch = cosh(u);
    const XReal w = radius * half_pi * cosh(t) / (ch * ch);
    const XReal d = 1L / (exp(ldexp(u, 1)) + 1L);
    const XReal offset = width * d;
    NodePair out;
    XReal xp = b - offset;
    if (xp < b && xp > a) out.plus = Node{std::move(xp), w};
    if (!t.is_zero()) {
      XReal xm = a + offset;
      if (xm > a && xm < b) out.minus = Node{std::move(xm), w};
    }
    return out;
  };
  return de_integrate(f, tanh_sinh, t_limit(bits, 2.0), cfg, "integrate");
}

XReal integrate(const RealFunction& f, const XReal& lo, const XReal& hi, const PrecisionConfig& cfg) {
  return integrate_detailed(f, lo, hi, cfg).value;
}

QuadratureResult integrate_upper_detailed(const RealFunction& f, const XReal& lo, const PrecisionConfig& cfg) {
  const int bits = cfg.working_bits;
  const XReal a(lo, bits);
  const XReal half_pi = ldexp(XReal::pi(bits), -1);

  // x = a + e^u, u = (pi/2) sinh t.
  Transform exp_sinh = [&](const XReal& t) {
    const XReal u = half_pi * sinh(t);
    const XReal scale = half_pi * cosh(t);
    NodePair out;
    const XReal ep = exp(u);
    out.plus = Node{a + ep, scale * ep};
    if (!t.is_zero()) {
      const XReal em = exp(-u);
      XReal xm = a + em;
      if (xm > a) out.minus = Node{std::move(xm), scale * em};
    }
    return out;
  };
  return de_integrate(f, exp_sinh, t_limit(bits, 4.0), cfg, "integrate_upper");
}

XReal integrate_upper(const RealFunction& f, const XReal& lo, const PrecisionConfig& cfg) {
  return integrate_upper_detailed(f, lo, cfg).value;
}

XReal integrate_real_line(const RealFunction& f, const PrecisionConfig& cfg) {
  const int bits = cfg.working_bits;
  const XReal half_pi = ldexp(XReal::pi(bits), -1);

  // x = sinh(u), u = (pi/2) sinh t.
  Transform sinh_sinh = [&](const XReal& t) {
    const XReal u = half_pi * sinh(t);
    const XReal w = half_pi * cosh(t) * cosh(u);
    const XReal x = sinh(u);
    NodePair out;
    out.plus = Node{x, w};
    if (!t.is_zero()) out.minus = Node{-x, w};
    return out;
  };
  return de_integrate(f, sinh_sinh, t_limit(bits, 4.0), cfg, "integrate_real_line").value;
}

}  // namespace impvol
