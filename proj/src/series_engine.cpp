#include "impvol/series_engine.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace impvol {

namespace {

void require_same_center(const PowerSeries& a, const PowerSeries& b, const char* op) {
  if (!(a.center == b.center)) throw DomainError(std::string(op) + ": series have different centers");
}

PowerSeries zeros(const XReal& center, int order) {
  const int bits = center.precision_bits();
  return PowerSeries{center, std::vector<XReal>(static_cast<std::size_t>(order) + 1, XReal::zero(bits))};
}

PowerSeries require_nonempty(const PowerSeries& a) {
  if (a.coeffs.empty()) throw DomainError("series has no coefficients");
  return a;
}

}  // namespace

void PowerSeries::validate() const {
  if (coeffs.empty()) throw DomainError("PowerSeries: order must be >= 0");
  const int bits = precision_bits();
  for (const XReal& c : coeffs) {
    if (c.precision_bits() != bits) throw DomainError("PowerSeries: coefficients carry mixed precision");
  }
}

PowerSeries PowerSeries::constant(const XReal& value, const XReal& center, int order) {
  if (order < 0) throw DomainError("PowerSeries: order must be >= 0");
  PowerSeries s = zeros(center, order);
  s.coeffs[0] = XReal(value, center.precision_bits());
  return s;
}

PowerSeries PowerSeries::variable(const XReal& center, int order) {
  PowerSeries s = constant(center, center, order);
  if (order >= 1) s.coeffs[1] = XReal::one(center.precision_bits());
  return s;
}

XReal PowerSeries::evaluate(const XReal& offset) const {
  require_nonempty(*this);
  XReal acc = coeffs.back();
  for (int n = order() - 1; n >= 0; --n) acc = acc * offset + coeffs[static_cast<std::size_t>(n)];
  return acc;
}

PowerSeries operator+(const PowerSeries& a, const PowerSeries& b) {
  require_same_center(a, b, "add");
  PowerSeries r = zeros(a.center, std::min(a.order(), b.order()));
  for (std::size_t n = 0; n < r.coeffs.size(); ++n) r.coeffs[n] = a.coeffs[n] + b.coeffs[n];
  return r;
}

PowerSeries operator-(const PowerSeries& a, const PowerSeries& b) {
  require_same_center(a, b, "subtract");
  PowerSeries r = zeros(a.center, std::min(a.order(), b.order()));
  for (std::size_t n = 0; n < r.coeffs.size(); ++n) r.coeffs[n] = a.coeffs[n] - b.coeffs[n];
  return r;
}

PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
  require_same_center(a, b, "multiply");
  PowerSeries r = zeros(a.center, std::min(a.order(), b.order()));
  const std::size_t len = r.coeffs.size();
  for (std::size_t i = 0; i < len; ++i) {
    if (a.coeffs[i].is_zero()) continue;
    for (std::size_t j = 0; i + j < len; ++j) r.coeffs[i + j].fma_add(a.coeffs[i], b.coeffs[j]);
  }
  return r;
}

PowerSeries operator*(const PowerSeries& a, const XReal& c) {
  PowerSeries r = a;
  for (XReal& x : r.coeffs) x *= c;
  return r;
}

PowerSeries operator+(const PowerSeries& a, const XReal& c) {
  PowerSeries r = require_nonempty(a);
  r.coeffs[0] += c;
  return r;
}

PowerSeries reciprocal(const PowerSeries& a) {
  require_nonempty(a);
  if (a.coeffs[0].is_zero()) throw DomainError("reciprocal: zero constant term");
  PowerSeries r = zeros(a.center, a.order());
  const XReal inv0 = 1L / a.coeffs[0];
  r.coeffs[0] = inv0;
  for (std::size_t n = 1; n < r.coeffs.size(); ++n) {
    XReal acc = XReal::zero(a.precision_bits());
    for (std::size_t k = 1; k <= n; ++k) acc.fma_add(a.coeffs[k], r.coeffs[n - k]);
    r.coeffs[n] = -acc * inv0;
  }
  return r;
}

PowerSeries divide(const PowerSeries& a, const PowerSeries& b) {
  require_nonempty(b);
  if (b.coeffs[0].is_zero()) throw DomainError("divide: divisor has zero constant term");
  return a * reciprocal(b);
}

PowerSeries exp(const PowerSeries& a) {
  require_nonempty(a);
  // b' = a' b
  PowerSeries r = zeros(a.center, a.order());
  r.coeffs[0] = exp(a.coeffs[0]);
  for (std::size_t n = 1; n < r.coeffs.size(); ++n) {
    XReal acc = XReal::zero(a.precision_bits());
    for (std::size_t k = 1; k <= n; ++k) acc.fma_add(a.coeffs[k] * static_cast<long>(k), r.coeffs[n - k]);
    r.coeffs[n] = acc / static_cast<long>(n);
  }
  return r;
}

PowerSeries log(const PowerSeries& a) {
  require_nonempty(a);
  if (!(a.coeffs[0] > 0L)) throw DomainError("log: constant term must be positive");
  // a b' = a'
  PowerSeries r = zeros(a.center, a.order());
  r.coeffs[0] = log(a.coeffs[0]);
  for (std::size_t n = 1; n < r.coeffs.size(); ++n) {
    XReal acc = a.coeffs[n] * static_cast<long>(n);
    for (std::size_t k = 1; k < n; ++k) acc.fms_sub(r.coeffs[k] * static_cast<long>(k), a.coeffs[n - k]);
    r.coeffs[n] = acc / (a.coeffs[0] * static_cast<long>(n));
  }
  return r;
}

PowerSeries pow(const PowerSeries& a, const XReal& alpha) {
  require_nonempty(a);
  if (!(a.coeffs[0] > 0L)) throw DomainError("pow: constant term must be positive");
  // a b' = alpha a' b
  PowerSeries r = zeros(a.center, a.order());
  r.coeffs[0] = pow(a.coeffs[0], alpha);
  for (std::size_t n = 1; n < r.coeffs.size(); ++n) {
    XReal acc = XReal::zero(a.precision_bits());
    for (std::size_t k = 1; k <= n; ++k) {
      const XReal weight = alpha * static_cast<long>(k) - static_cast<long>(n - k);
      acc.fma_add(weight * a.coeffs[k], r.coeffs[n - k]);
    }
    r.coeffs[n] = acc / (a.coeffs[0] * static_cast<long>(n));
  }
  return r;
}

PowerSeries sqrt(const PowerSeries& a) { return pow(a, XReal(1, a.precision_bits()) / 2L); }

PowerSeries derivative(const PowerSeries& a) {
  require_nonempty(a);
  if (a.order() == 0) return PowerSeries::constant(XReal::zero(a.precision_bits()), a.center, 0);
  PowerSeries r = zeros(a.center, a.order() - 1);
  for (std::size_t n = 0; n < r.coeffs.size(); ++n) r.coeffs[n] = a.coeffs[n + 1] * static_cast<long>(n + 1);
  return r;
}

PowerSeries antiderivative(const PowerSeries& a, const XReal& constant) {
  require_nonempty(a);
  PowerSeries r = zeros(a.center, a.order() + 1);
  r.coeffs[0] = XReal(constant, a.precision_bits());
  for (std::size_t n = 0; n < a.coeffs.size(); ++n) r.coeffs[n + 1] = a.coeffs[n] / static_cast<long>(n + 1);
  return r;
}

PowerSeries truncate(const PowerSeries& a, int order) {
  if (order < 0 || order > a.order()) throw DomainError("truncate: order outside [0, series order]");
  PowerSeries r = a;
  r.coeffs.resize(static_cast<std::size_t>(order) + 1);
  return r;
}

PowerSeries compose(const PowerSeries& outer, const PowerSeries& inner) {
  require_nonempty(outer);
  require_nonempty(inner);
  if (!inner.coeffs[0].is_zero()) throw DomainError("compose: inner series must have zero constant term");
  const int order = std::min(outer.order(), inner.order());
  const PowerSeries in = truncate(inner, order);
  PowerSeries acc = PowerSeries::constant(outer.coeffs[static_cast<std::size_t>(order)], inner.center, order);
  for (int n = order - 1; n >= 0; --n) acc = acc * in + outer.coeffs[static_cast<std::size_t>(n)];
  return acc;
}

PowerSeries recenter(const PowerSeries& a, const XReal& new_center) {
  require_nonempty(a);
  const XReal delta = new_center - a.center;
  PowerSeries r = a;
  r.center = XReal(new_center, a.precision_bits());
  // Taylor shift by repeated synthetic division.
  const int n = a.order();
  for (int k = 0; k < n; ++k) {
    for (int i = n - 1; i >= k; --i) r.coeffs[static_cast<std::size_t>(i)].fma_add(delta, r.coeffs[static_cast<std::size_t>(i + 1)]);
  }
  return r;
}

PowerSeries series_reverse(const PowerSeries& s) {
  require_nonempty(s);
  const int order = s.order();
  if (order < 1 || s.coeffs[1].is_zero()) throw DomainError("series_reverse: zero linear coefficient, not invertible");
  const int bits = s.precision_bits();

  // Lagrange: r_n = (1/n) [t^{n-1}] phi^n, phi = t / (s(t) - s0).
  PowerSeries shifted = zeros(XReal::zero(bits), order - 1);
  for (int n = 0; n < order; ++n) shifted.coeffs[static_cast<std::size_t>(n)] = s.coeffs[static_cast<std::size_t>(n + 1)];
  const PowerSeries phi = reciprocal(shifted);

  PowerSeries r = zeros(s.coeffs[0], order);
  r.coeffs[0] = s.center;
  PowerSeries power = phi;
  for (int n = 1; n <= order; ++n) {
    if (n > 1) power = power * phi;
    r.coeffs[static_cast<std::size_t>(n)] = power.coeffs[static_cast<std::size_t>(n - 1)] / static_cast<long>(n);
  }
  return r;
}

namespace {

// N'(u0 + t) = N'(u0) exp(-u0 t - t^2/2)
PowerSeries norm_pdf_series(const XReal& u0, int order) {
  const int bits = u0.precision_bits();
  PowerSeries q = zeros(u0, order);
  if (order >= 1) q.coeffs[1] = -u0;
  if (order >= 2) q.coeffs[2] = XReal(-1, bits) / 2L;
  return exp(q) * norm_pdf(u0);
}

PowerSeries norm_cdf_series(const XReal& u0, int order) {
  if (order == 0) return PowerSeries::constant(norm_cdf(u0), u0, 0);
  return antiderivative(norm_pdf_series(u0, order - 1), norm_cdf(u0));
}

}  // namespace

PowerSeries series_F(const XReal& x0_in, int order, const PrecisionConfig& cfg) {
  cfg.validate();
  if (order < 1) throw DomainError("series_F: order must be >= 1");
  const XReal x0(x0_in, cfg.working_bits);
  if (!(x0 > 0L)) throw DomainError("series_F: x0 must be positive");

  // F'(x) = N'(g(x)), g = 1/x + x/2; N'(g) = N'(g0) exp(-(g^2 - g0^2)/2).
  const PowerSeries t = PowerSeries::variable(x0, order - 1);
  const PowerSeries g = reciprocal(t) + t * ldexp(XReal::one(cfg.working_bits), -1);
  PowerSeries q = g * g * XReal(-1, cfg.working_bits) * ldexp(XReal::one(cfg.working_bits), -1);
  q.coeffs[0] = XReal::zero(cfg.working_bits);
  const PowerSeries derivative_series = exp(q) * F_derivative(x0);
  return antiderivative(derivative_series, F_eval(x0, cfg));
}

PowerSeries series_f_direct(int order, const XReal& maturity_in, const PrecisionConfig& cfg) {
  cfg.validate();
  if (order < 1) throw DomainError("series_f_direct: order must be >= 1");
  const int bits = cfg.working_bits;
  const XReal maturity(maturity_in, bits);
  if (!(maturity > 0L)) throw DomainError("series_f_direct: maturity T must be positive");
  const XReal center = 1L / ldexp(XReal::e(bits), 1);
  const XReal x0 = F_inv(center, cfg);
  // F(x0) differs from 1/(2e) by the root tolerance; shift the inverse onto the exact center.
  const PowerSeries inverse = recenter(series_reverse(series_F(x0, order, cfg)), center);
  return inverse * (1L / sqrt(maturity));
}

// ---------------------------------------------------------------------------
// TriSeries

namespace {

struct Layout {
  int degree = 0;
  std::vector<std::array<int, 3>> monomials;
  std::vector<int> total;
  std::vector<std::size_t> prefix;  // prefix[d] = number of monomials with total degree < d
  std::vector<int> lookup;          // (D+1)^3 cube
};

const Layout& layout_for(int degree) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Layout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[degree];
  if (!slot) {
    auto layout = std::make_unique<Layout>();
    layout->degree = degree;
    const int side = degree + 1;
    layout->lookup.assign(static_cast<std::size_t>(side) * side * side, -1);
    for (int d = 0; d <= degree; ++d) {
      layout->prefix.push_back(layout->monomials.size());
      for (int i = d; i >= 0; --i) {
        for (int j = d - i; j >= 0; --j) {
          const int k = d - i - j;
          layout->lookup[(static_cast<std::size_t>(i) * side + j) * side + k] = static_cast<int>(layout->monomials.size());
          layout->monomials.push_back({i, j, k});
          layout->total.push_back(d);
        }
      }
    }
    layout->prefix.push_back(layout->monomials.size());
    slot = std::move(layout);
  }
  return *slot;
}

}  // namespace

TriSeries::TriSeries(std::array<XReal, 3> center, int total_degree, int bits)
    : center_(std::move(center)), degree_(total_degree), bits_(bits) {
  if (total_degree < 0) throw DomainError("TriSeries: total degree must be >= 0");
  coeffs_.assign(layout_for(total_degree).monomials.size(), XReal::zero(bits));
}

std::size_t TriSeries::index(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i + j + k > degree_) {
    throw DomainError("TriSeries: index triple outside i+j+k <= " + std::to_string(degree_));
  }
  const int side = degree_ + 1;
  return static_cast<std::size_t>(layout_for(degree_).lookup[(static_cast<std::size_t>(i) * side + j) * side + k]);
}

const XReal& TriSeries::at(int i, int j, int k) const { return coeffs_[index(i, j, k)]; }
XReal& TriSeries::at(int i, int j, int k) { return coeffs_[index(i, j, k)]; }

const std::array<int, 3>& TriSeries::exponents(std::size_t n) const { return layout_for(degree_).monomials.at(n); }

int TriSeries::valuation(const XReal& threshold) const {
  const Layout& l = layout_for(degree_);
  for (std::size_t n = 0; n < coeffs_.size(); ++n) {
    if (abs(coeffs_[n]) > threshold) return l.total[n];
  }
  return degree_ + 1;
}

TriSeries TriSeries::constant(const std::array<XReal, 3>& center, int total_degree, const XReal& value) {
  TriSeries t(center, total_degree, value.precision_bits());
  t.coeffs_[0] = value;
  return t;
}

TriSeries TriSeries::variable(const std::array<XReal, 3>& center, int total_degree, int axis, const XReal& value) {
  if (axis < 0 || axis > 2) throw DomainError("TriSeries: axis must be 0, 1 or 2");
  TriSeries t = constant(center, total_degree, value);
  if (total_degree >= 1) {
    std::array<int, 3> e{0, 0, 0};
    e[static_cast<std::size_t>(axis)] = 1;
    t.at(e[0], e[1], e[2]) = XReal::one(value.precision_bits());
  }
  return t;
}

void TriSeries::check_compatible(const TriSeries& other) const {
  if (degree_ != other.degree_) throw DomainError("TriSeries: total degrees differ");
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(center_[a] == other.center_[a])) throw DomainError("TriSeries: centers differ");
  }
}

TriSeries operator+(const TriSeries& a, const TriSeries& b) {
  a.check_compatible(b);
  TriSeries r = a;
  for (std::size_t n = 0; n < r.coeffs_.size(); ++n) r.coeffs_[n] += b.coeffs_[n];
  return r;
}

TriSeries operator-(const TriSeries& a, const TriSeries& b) {
  a.check_compatible(b);
  TriSeries r = a;
  for (std::size_t n = 0; n < r.coeffs_.size(); ++n) r.coeffs_[n] -= b.coeffs_[n];
  return r;
}

TriSeries operator*(const TriSeries& a, const TriSeries& b) {
  a.check_compatible(b);
  const Layout& l = layout_for(a.degree_);
  const int side = a.degree_ + 1;
  TriSeries r(a.center_, a.degree_, std::max(a.bits_, b.bits_));
  for (std::size_t p = 0; p < a.coeffs_.size(); ++p) {
    if (a.coeffs_[p].is_zero()) continue;
    const auto& ea = l.monomials[p];
    const std::size_t limit = l.prefix[static_cast<std::size_t>(a.degree_ - l.total[p] + 1)];
    for (std::size_t q = 0; q < limit; ++q) {
      if (b.coeffs_[q].is_zero()) continue;
      const auto& eb = l.monomials[q];
      const int i = ea[0] + eb[0];
      const int j = ea[1] + eb[1];
      const int k = ea[2] + eb[2];
      const int idx = l.lookup[(static_cast<std::size_t>(i) * side + j) * side + k];
      r.coeffs_[static_cast<std::size_t>(idx)].fma_add(a.coeffs_[p], b.coeffs_[q]);
    }
  }
  return r;
}

TriSeries operator*(const TriSeries& a, const XReal& c) {
  TriSeries r = a;
  for (XReal& x : r.coeffs_) x *= c;
  return r;
}

TriSeries operator+(const TriSeries& a, const XReal& c) {
  TriSeries r = a;
  r.coeffs_[0] += c;
  return r;
}

TriSeries compose_univariate(const PowerSeries& g, const TriSeries& u) {
  require_nonempty(g);
  if (!(g.center == u.constant_term())) {
    throw DomainError("compose_univariate: outer series must be centered at the inner constant term");
  }
  TriSeries inner = u;
  inner.coeff(0) = XReal::zero(u.precision_bits());
  const int order = std::min(g.order(), u.total_degree());
  TriSeries acc = TriSeries::constant(u.center(), u.total_degree(), XReal(g.coeffs[static_cast<std::size_t>(order)], u.precision_bits()));
  for (int n = order - 1; n >= 0; --n) acc = acc * inner + g.coeffs[static_cast<std::size_t>(n)];
  return acc;
}

namespace {

TriSeries tri_log(const TriSeries& u) {
  const XReal& u0 = u.constant_term();
  return compose_univariate(log(PowerSeries::variable(u0, u.total_degree())), u);
}

TriSeries tri_reciprocal(const TriSeries& u) {
  const XReal& u0 = u.constant_term();
  return compose_univariate(reciprocal(PowerSeries::variable(u0, u.total_degree())), u);
}

TriSeries tri_norm_cdf(const TriSeries& u) { return compose_univariate(norm_cdf_series(u.constant_term(), u.total_degree()), u); }
TriSeries tri_norm_pdf(const TriSeries& u) { return compose_univariate(norm_pdf_series(u.constant_term(), u.total_degree()), u); }

}  // namespace

TriSeries tri_series_I(int total_degree, const XReal& maturity_in, const PrecisionConfig& cfg) {
  cfg.validate();
  if (total_degree < 1) throw DomainError("tri_series_I: total degree must be >= 1");
  const int bits = cfg.working_bits;
  const int degree = total_degree;
  const XReal maturity(maturity_in, bits);
  if (!(maturity > 0L)) throw DomainError("tri_series_I: maturity T must be positive");

  const XReal e = XReal::e(bits);
  const XReal half = ldexp(XReal::one(bits), -1);
  const std::array<XReal, 3> center{half, 1L / ldexp(e, 1), half - 1L / ldexp(e, 2)};
  const XReal sigma0 = implied_vol(Quote{center[0], center[1], maturity, center[2]}, cfg);

  const TriSeries spot = TriSeries::variable(center, degree, 0, center[0]);
  const TriSeries strike = TriSeries::variable(center, degree, 1, center[1]);
  const TriSeries price = TriSeries::variable(center, degree, 2, center[2]);
  const TriSeries log_moneyness = tri_log(spot) - tri_log(strike);
  const XReal sqrt_t = sqrt(maturity);
  const XReal threshold = XReal::pow2(-(3 * bits) / 4, bits);

  // Residual of C_BS(S, K, sigma) - c and its sigma-derivative, as series.
  auto residual_and_vega = [&](const TriSeries& sigma) {
    const TriSeries total = sigma * sqrt_t;
    const TriSeries d1 = log_moneyness * tri_reciprocal(total) + total * half;
    const TriSeries d2 = d1 - total;
    TriSeries residual = spot * tri_norm_cdf(d1) - strike * tri_norm_cdf(d2) - price;
    TriSeries v = spot * tri_norm_pdf(d1) * sqrt_t;
    return std::pair<TriSeries, TriSeries>{std::move(residual), std::move(v)};
  };

  TriSeries sigma = TriSeries::constant(center, degree, sigma0);
  int iterations = 1;
  while ((1 << (iterations - 1)) < degree + 1) ++iterations;  // ceil(log2(D+1)) + 1
  int previous = -1;
  for (int it = 0; it < iterations; ++it) {
    auto [residual, v] = residual_and_vega(sigma);
    const int val = residual.valuation(threshold);
    if (val <= degree && val <= previous) {
      throw NumericalError("tri_series_I: Newton stagnated, residual valuation " + std::to_string(val) +
                           " did not increase");
    }
    previous = val;
    sigma = sigma - residual * tri_reciprocal(v);
  }
  const int final_val = residual_and_vega(sigma).first.valuation(threshold);
  if (final_val <= degree) {
    throw NumericalError("tri_series_I: residual has terms of total degree " + std::to_string(final_val) +
                         " after Newton");
  }
  return sigma;
}

PowerSeries substitute_specialize(const TriSeries& t, int order) {
  if (order < 0) throw DomainError("substitute_specialize: order must be >= 0");
  if (order > t.total_degree()) {
    throw DomainError("substitute_specialize: order " + std::to_string(order) + " exceeds available total degree " +
                      std::to_string(t.total_degree()));
  }
  const int bits = t.precision_bits();
  const XReal e = XReal::e(bits);
  const XReal& center = t.center()[1];
  // (X, Y, Z) -> (eX, X, eX + eX^2)
  PowerSeries sx = PowerSeries::constant(XReal::zero(bits), center, order);
  PowerSeries sy = sx;
  PowerSeries sz = sx;
  if (order >= 1) {
    sx.coeffs[1] = e;
    sy.coeffs[1] = XReal::one(bits);
    sz.coeffs[1] = e;
  }
  if (order >= 2) sz.coeffs[2] = e;

  auto powers = [&](const PowerSeries& base) {
    std::vector<PowerSeries> out{PowerSeries::constant(XReal::one(bits), center, order)};
    for (int n = 1; n <= order; ++n) out.push_back(out.back() * base);
    return out;
  };
  const std::vector<PowerSeries> px = powers(sx);
  const std::vector<PowerSeries> py = powers(sy);
  const std::vector<PowerSeries> pz = powers(sz);

  PowerSeries result = PowerSeries::constant(XReal::zero(bits), center, order);
  for (std::size_t n = 0; n < t.size(); ++n) {
    const auto& [i, j, k] = t.exponents(n);
    if (i + j + k > order || t.coeff(n).is_zero()) continue;
    result = result + px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)] * pz[static_cast<std::size_t>(k)] * t.coeff(n);
  }
  return result;
}

}  // namespace impvol
