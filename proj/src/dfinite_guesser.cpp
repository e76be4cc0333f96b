#include "impvol/dfinite_guesser.hpp"

#include "impvol/implied_surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

namespace impvol {

namespace {

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

long rising(long m, int i) {
  long out = 1;
  for (int t = 0; t < i; ++t) out *= m + t;
  return out;
}

int holdout_rows_for(int rows, double fraction) {
  return std::max(1, static_cast<int>(std::ceil(fraction * rows)));
}

// Coefficient of x^n in x^j y^(i): a_{n-j+i} (n-j+1)_i, zero when n < j.
template <class T, class Make>
T entry(const std::vector<T>& a, int n, int i, int j, Make&& scale) {
  if (n < j) return scale(T{}, 0);
  return scale(a[static_cast<std::size_t>(n - j + i)], rising(n - j + 1, i));
}

// --- numeric linear algebra --------------------------------------------

struct Svd {
  std::vector<XReal> sigma;
  std::vector<std::vector<XReal>> v;  // columns
};

// One-sided Jacobi on the columns of an m x n matrix (m >= n).
Svd jacobi_svd(std::vector<std::vector<XReal>> cols, int bits) {
  const std::size_t n = cols.size();
  const std::size_t m = n ? cols[0].size() : 0;
  std::vector<std::vector<XReal>> v(n, std::vector<XReal>(n, XReal::zero(bits)));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = XReal::one(bits);

  const XReal tol = XReal::pow2(-(bits - 8), bits);
  XReal tmp = XReal::zero(bits);
  std::vector<XReal> norm2(n, XReal::zero(bits));
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    // Squared column norms are refreshed once per sweep and updated in between.
    for (std::size_t p = 0; p < n; ++p) {
      norm2[p] = XReal::zero(bits);
      for (std::size_t k = 0; k < m; ++k) norm2[p].fma_add(cols[p][k], cols[p][k]);
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const XReal& alpha = norm2[p];
        const XReal& beta = norm2[q];
        XReal gamma = XReal::zero(bits);
        for (std::size_t k = 0; k < m; ++k) gamma.fma_add(cols[p][k], cols[q][k]);
        if (gamma.is_zero() || alpha.is_zero() || beta.is_zero()) continue;
        if (abs(gamma) <= tol * sqrt(alpha * beta)) continue;
        rotated = true;
        const XReal zeta = (beta - alpha) / ldexp(gamma, 1);
        const XReal t = (zeta >= 0L ? XReal::one(bits) : XReal(-1L, bits)) / (abs(zeta) + sqrt(1L + zeta * zeta));
        const XReal c = 1L / sqrt(1L + t * t);
        const XReal s = c * t;
        auto rotate = [&](std::vector<XReal>& xp, std::vector<XReal>& xq) {
          for (std::size_t k = 0; k < xp.size(); ++k) {
            tmp = xp[k];
            tmp *= c;
            tmp.fms_sub(s, xq[k]);
            xq[k] *= c;
            xq[k].fma_add(s, xp[k]);
            std::swap(xp[k], tmp);
          }
        };
        rotate(cols[p], cols[q]);
        rotate(v[p], v[q]);
        const XReal shift = t * gamma;
        norm2[p] = max(norm2[p] - shift, XReal::zero(bits));
        norm2[q] += shift;
      }
    }
    if (!rotated) {
      Svd out;
      for (const auto& col : cols) {
        XReal norm = XReal::zero(bits);
        for (const XReal& x : col) norm.fma_add(x, x);
        out.sigma.push_back(sqrt(norm));
      }
      out.v = std::move(v);
      return out;
    }
  }
  throw NumericalError("jacobi_svd: no convergence after 100 sweeps");
}

struct CellOutcome {
  LatticeCell cell;
  std::optional<OdeCandidate> candidate;
};

CellOutcome solve_cell(const std::vector<XReal>& a, int r, int d, const GuessConfig& cfg, int bits) {
  const int total_rows = static_cast<int>(a.size()) - r;
  const int unknowns = (r + 1) * (d + 1);
  CellOutcome out;
  LatticeCell& cell = out.cell;
  cell.r = r;
  cell.d = d;
  cell.unknowns = unknowns;
  cell.holdout_rows = holdout_rows_for(total_rows, cfg.holdout_fraction);
  cell.fit_rows = total_rows - cell.holdout_rows;
  cell.bits_used = bits;
  cell.min_singular_ratio = XReal::zero(bits);
  if (cell.fit_rows < unknowns) {
    cell.verdict = CellVerdict::Underdetermined;
    return out;
  }

  auto scale = [&](const XReal& x, long k) { return k == 0 ? XReal::zero(bits) : XReal(x, bits) * k; };
  std::vector<std::vector<XReal>> raw(static_cast<std::size_t>(total_rows));
  for (int n = 0; n < total_rows; ++n) {
    auto& row = raw[static_cast<std::size_t>(n)];
    for (int i = 0; i <= r; ++i) {
      for (int j = 0; j <= d; ++j) row.push_back(entry(a, n, i, j, scale));
    }
  }

  // Row equilibration by the largest entry, then column 2-norms.
  std::vector<std::vector<XReal>> cols(static_cast<std::size_t>(unknowns),
                                       std::vector<XReal>(static_cast<std::size_t>(cell.fit_rows), XReal::zero(bits)));
  for (int n = 0; n < cell.fit_rows; ++n) {
    XReal row_max = XReal::zero(bits);
    for (const XReal& x : raw[static_cast<std::size_t>(n)]) row_max = max(row_max, abs(x));
    if (row_max.is_zero()) continue;
    for (int c = 0; c < unknowns; ++c) {
      cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(n)] = raw[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)] / row_max;
    }
  }
  std::vector<XReal> col_scale;
  for (auto& col : cols) {
    XReal norm = XReal::zero(bits);
    for (const XReal& x : col) norm.fma_add(x, x);
    norm = sqrt(norm);
    if (norm.is_zero()) norm = XReal::one(bits);
    for (XReal& x : col) x /= norm;
    col_scale.push_back(norm);
  }

  const Svd svd = jacobi_svd(std::move(cols), bits);
  std::size_t arg_min = 0;
  XReal sigma_max = XReal::zero(bits);
  for (std::size_t c = 0; c < svd.sigma.size(); ++c) {
    if (svd.sigma[c] < svd.sigma[arg_min]) arg_min = c;
    sigma_max = max(sigma_max, svd.sigma[c]);
  }
  cell.min_singular_ratio = sigma_max.is_zero() ? XReal::zero(bits) : svd.sigma[arg_min] / sigma_max;

  if (cell.min_singular_ratio >= cfg.reject_ratio(bits)) {
    cell.verdict = CellVerdict::None;
    return out;
  }
  if (cell.min_singular_ratio > cfg.accept_ratio(bits)) {
    cell.verdict = CellVerdict::Indeterminate;
    return out;
  }

  // Null vector of the scaled system, mapped back and normalized to max |p| = 1.
  std::vector<XReal> p;
  for (int c = 0; c < unknowns; ++c) p.push_back(svd.v[arg_min][static_cast<std::size_t>(c)] / col_scale[static_cast<std::size_t>(c)]);
  // Ties (to half precision) go to the highest derivative.
  XReal largest = XReal::zero(bits);
  for (const XReal& x : p) largest = max(largest, abs(x));
  std::size_t lead = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (abs(p[c]) >= largest * (1L - cfg.accept_ratio(bits))) lead = c;
  }
  const XReal pivot = p[lead];
  for (XReal& x : p) x /= pivot;

  XReal residual = XReal::zero(bits);
  for (int n = cell.fit_rows; n < total_rows; ++n) {
    XReal sum = XReal::zero(bits);
    XReal mass = XReal::zero(bits);
    for (int c = 0; c < unknowns; ++c) {
      const XReal term = raw[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)] * p[static_cast<std::size_t>(c)];
      sum += term;
      mass += abs(term);
    }
    if (!mass.is_zero()) residual = max(residual, abs(sum) / mass);
  }

  OdeCandidate cand;
  cand.r = r;
  cand.d = d;
  cand.fit_rows = cell.fit_rows;
  cand.residual = residual;
  cand.poly_coeffs.assign(static_cast<std::size_t>(r + 1), {});
  for (int i = 0; i <= r; ++i) {
    for (int j = 0; j <= d; ++j) cand.poly_coeffs[static_cast<std::size_t>(i)].push_back(p[static_cast<std::size_t>(i * (d + 1) + j)]);
  }
  cell.verdict = residual <= cfg.holdout_tolerance(bits) ? CellVerdict::Accept : CellVerdict::HoldoutFailed;
  out.candidate = std::move(cand);
  return out;
}

// --- exact path -----------------------------------------------------------

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mul_mod(r, a);
    a = mul_mod(a, a);
    e >>= 1;
  }
  return r;
}

std::uint64_t mpz_mod_prime(const mpz_class& z) {
  mpz_class m = z % mpz_class(std::to_string(kPrime));
  if (m < 0) m += mpz_class(std::to_string(kPrime));
  return static_cast<std::uint64_t>(std::stoull(m.get_str()));
}

// Rank modulo the prime; nullopt when a denominator vanishes mod p.
std::optional<int> rank_mod_p(const std::vector<std::uint64_t>& a, bool usable, int rows, int r, int d) {
  if (!usable) return std::nullopt;
  const int cols = (r + 1) * (d + 1);
  std::vector<std::vector<std::uint64_t>> m(static_cast<std::size_t>(rows), std::vector<std::uint64_t>(static_cast<std::size_t>(cols), 0));
  for (int n = 0; n < rows; ++n) {
    for (int i = 0; i <= r; ++i) {
      for (int j = 0; j <= d; ++j) {
        if (n < j) continue;
        const std::uint64_t k = static_cast<std::uint64_t>(rising(n - j + 1, i)) % kPrime;
        m[static_cast<std::size_t>(n)][static_cast<std::size_t>(i * (d + 1) + j)] = mul_mod(a[static_cast<std::size_t>(n - j + i)], k);
      }
    }
  }
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = -1;
    for (int n = rank; n < rows; ++n) {
      if (m[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)] != 0) {
        piv = n;
        break;
      }
    }
    if (piv < 0) continue;
    std::swap(m[static_cast<std::size_t>(piv)], m[static_cast<std::size_t>(rank)]);
    const auto& prow = m[static_cast<std::size_t>(rank)];
    const std::uint64_t inv = pow_mod(prow[static_cast<std::size_t>(c)], kPrime - 2);
    for (int n = rank + 1; n < rows; ++n) {
      auto& row = m[static_cast<std::size_t>(n)];
      if (row[static_cast<std::size_t>(c)] == 0) continue;
      const std::uint64_t f = mul_mod(row[static_cast<std::size_t>(c)], inv);
      for (int k = c; k < cols; ++k) {
        row[static_cast<std::size_t>(k)] = (row[static_cast<std::size_t>(k)] + kPrime - mul_mod(f, prow[static_cast<std::size_t>(k)])) % kPrime;
      }
    }
    ++rank;
  }
  return rank;
}

// A nonzero rational null vector, or nullopt for full column rank.
std::optional<std::vector<mpq_class>> null_vector_exact(const std::vector<mpq_class>& a, int rows, int r, int d) {
  const int cols = (r + 1) * (d + 1);
  std::vector<std::vector<mpq_class>> m(static_cast<std::size_t>(rows), std::vector<mpq_class>(static_cast<std::size_t>(cols)));
  for (int n = 0; n < rows; ++n) {
    for (int i = 0; i <= r; ++i) {
      for (int j = 0; j <= d; ++j) {
        if (n < j) continue;
        m[static_cast<std::size_t>(n)][static_cast<std::size_t>(i * (d + 1) + j)] = a[static_cast<std::size_t>(n - j + i)] * rising(n - j + 1, i);
      }
    }
  }
  std::vector<int> pivot_col;
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = -1;
    for (int n = rank; n < rows; ++n) {
      if (sgn(m[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)]) != 0) {
        piv = n;
        break;
      }
    }
    if (piv < 0) continue;
    std::swap(m[static_cast<std::size_t>(piv)], m[static_cast<std::size_t>(rank)]);
    auto& prow = m[static_cast<std::size_t>(rank)];
    const mpq_class inv = 1 / prow[static_cast<std::size_t>(c)];
    for (int k = c; k < cols; ++k) prow[static_cast<std::size_t>(k)] *= inv;
    for (int n = 0; n < rows; ++n) {
      if (n == rank) continue;
      auto& row = m[static_cast<std::size_t>(n)];
      if (sgn(row[static_cast<std::size_t>(c)]) == 0) continue;
      const mpq_class f = row[static_cast<std::size_t>(c)];
      for (int k = c; k < cols; ++k) row[static_cast<std::size_t>(k)] -= f * prow[static_cast<std::size_t>(k)];
    }
    pivot_col.push_back(c);
    ++rank;
  }
  if (rank == cols) return std::nullopt;
  int free_col = 0;
  while (std::find(pivot_col.begin(), pivot_col.end(), free_col) != pivot_col.end()) ++free_col;
  std::vector<mpq_class> x(static_cast<std::size_t>(cols));
  x[static_cast<std::size_t>(free_col)] = 1;
  for (int k = 0; k < rank; ++k) x[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(k)])] = -m[static_cast<std::size_t>(k)][static_cast<std::size_t>(free_col)];
  return x;
}

ExactResult run_exact(const std::vector<mpq_class>& coeffs, const GuessConfig& cfg, int bits) {
  ExactResult out;
  const int n_coeffs = cfg.n_coeffs;
  std::vector<std::uint64_t> residues;
  bool usable = true;
  for (int k = 0; k < n_coeffs; ++k) {
    const mpq_class& q = coeffs[static_cast<std::size_t>(k)];
    const std::uint64_t den = mpz_mod_prime(q.get_den());
    if (den == 0) {
      usable = false;
      break;
    }
    residues.push_back(mul_mod(mpz_mod_prime(q.get_num()), pow_mod(den, kPrime - 2)));
  }
  for (int r = 1; r <= cfg.r_max; ++r) {
    for (int d = 0; d <= cfg.d_max; ++d) {
      const int rows = n_coeffs - r;
      const int cols = (r + 1) * (d + 1);
      if (rows >= cols) {
        const std::optional<int> rank = rank_mod_p(residues, usable, rows, r, d);
        if (rank && *rank == cols) {
          ++out.certified_full_rank;
          continue;
        }
      }
      std::optional<std::vector<mpq_class>> x = null_vector_exact(coeffs, rows, r, d);
      if (!x) {
        ++out.certified_full_rank;
        continue;
      }
      mpq_class lead = 0;
      for (const mpq_class& v : *x) {
        if (abs(v) >= abs(lead)) lead = v;
      }
      OdeCandidate cand;
      cand.r = r;
      cand.d = d;
      cand.fit_rows = rows;
      cand.residual = XReal::zero(bits);
      std::vector<std::vector<mpq_class>> exact(static_cast<std::size_t>(r + 1));
      cand.poly_coeffs.assign(static_cast<std::size_t>(r + 1), {});
      for (int i = 0; i <= r; ++i) {
        for (int j = 0; j <= d; ++j) {
          mpq_class v = (*x)[static_cast<std::size_t>(i * (d + 1) + j)] / lead;
          v.canonicalize();
          cand.poly_coeffs[static_cast<std::size_t>(i)].push_back(XReal::from_mpq(v.get_mpq_t(), bits));
          exact[static_cast<std::size_t>(i)].push_back(std::move(v));
        }
      }
      cand.exact = std::move(exact);
      out.relation = std::move(cand);
      return out;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(GuessStatus s) {
  switch (s) {
    case GuessStatus::Found: return "FOUND";
    case GuessStatus::NoneUpToBounds: return "NONE_UP_TO_BOUNDS";
    case GuessStatus::Inconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

std::string_view to_string(CellVerdict v) {
  switch (v) {
    case CellVerdict::None: return "NONE";
    case CellVerdict::Accept: return "ACCEPT";
    case CellVerdict::Indeterminate: return "INDETERMINATE";
    case CellVerdict::HoldoutFailed: return "HOLDOUT_FAILED";
    case CellVerdict::Underdetermined: return "UNDERDETERMINED";
  }
  return "UNKNOWN";
}

void GuessConfig::validate() const {
  if (r_max < 1) throw DomainError("GuessConfig: r_max must be >= 1");
  if (d_max < 0) throw DomainError("GuessConfig: d_max must be >= 0");
  if (working_bits < kMinPrecisionBits) throw DomainError("GuessConfig: working_bits must be >= 64");
  if (max_bits < working_bits) throw DomainError("GuessConfig: max_bits must be >= working_bits");
  if (!(holdout_fraction > 0.0) || holdout_fraction > 0.3) throw DomainError("GuessConfig: holdout_fraction must be in (0, 0.3]");
  const int needed = (r_max + 1) * (d_max + 1) + kGuardRows;
  if (n_coeffs < needed) {
    throw DomainError("GuessConfig: n_coeffs = " + std::to_string(n_coeffs) + " below (r_max+1)(d_max+1) + " +
                      std::to_string(kGuardRows) + " = " + std::to_string(needed));
  }
}

GuessReport guess_ode(const SeriesSource& source, const GuessConfig& cfg) {
  cfg.validate();
  if (!source.at_bits) throw DomainError("guess_ode: series source has no generator");
  GuessReport report;
  report.config = cfg;

  std::map<int, std::vector<XReal>> by_bits;
  auto coefficients = [&](int bits) -> const std::vector<XReal>& {
    auto it = by_bits.find(bits);
    if (it != by_bits.end()) return it->second;
    const PowerSeries s = source.at_bits(bits);
    if (s.order() + 1 < cfg.n_coeffs) {
      throw DomainError("guess_ode: series has " + std::to_string(s.order() + 1) + " coefficients, n_coeffs = " +
                        std::to_string(cfg.n_coeffs));
    }
    std::vector<XReal> a;
    for (int k = 0; k < cfg.n_coeffs; ++k) a.emplace_back(s.coeffs[static_cast<std::size_t>(k)], bits);
    return by_bits.emplace(bits, std::move(a)).first->second;
  };
  const PowerSeries first = source.at_bits(cfg.working_bits);
  report.series_bits = first.precision_bits();
  if (report.series_bits < cfg.working_bits) {
    throw DomainError("guess_ode: series precision " + std::to_string(report.series_bits) + " below working_bits " +
                      std::to_string(cfg.working_bits));
  }
  const int cap = source.max_bits > 0 ? std::min(source.max_bits, cfg.max_bits) : cfg.max_bits;

  bool found = false;
  for (int r = 1; r <= cfg.r_max && !found; ++r) {
    for (int d = 0; d <= cfg.d_max && !found; ++d) {
      int bits = cfg.working_bits;
      CellOutcome outcome = solve_cell(coefficients(bits), r, d, cfg, bits);
      while (outcome.cell.verdict == CellVerdict::Indeterminate) {
        const int next = 2 * bits;
        if (next > cap) {
          throw PrecisionExhausted("guess_ode: cell (r=" + std::to_string(r) + ", d=" + std::to_string(d) +
                                       ") is indeterminate at " + std::to_string(bits) +
                                       " bits; requires working_bits >= " + std::to_string(next),
                                   next);
        }
        bits = next;
        outcome = solve_cell(coefficients(bits), r, d, cfg, bits);
      }
      report.cells.push_back(outcome.cell);
      if (outcome.cell.verdict == CellVerdict::Accept) {
        report.candidate = std::move(outcome.candidate);
        found = true;
      }
    }
  }
  if (found) {
    report.status = GuessStatus::Found;
  } else {
    const bool all_none = std::all_of(report.cells.begin(), report.cells.end(),
                                      [](const LatticeCell& c) { return c.verdict == CellVerdict::None; });
    report.status = all_none ? GuessStatus::NoneUpToBounds : GuessStatus::Inconclusive;
  }

  if (source.rational) {
    if (static_cast<int>(source.rational->size()) < cfg.n_coeffs) {
      throw DomainError("guess_ode: fewer rational coefficients than n_coeffs");
    }
    report.exact = run_exact(*source.rational, cfg, cfg.working_bits);
    report.note = "rational coefficients: exact null-space path run alongside the floating-point path";
  } else {
    report.note = "floating-point path only: coefficients are not known to be rational";
  }
  return report;
}

GuessReport guess_ode(const PowerSeries& s, const GuessConfig& cfg) {
  s.validate();
  SeriesSource source;
  source.name = "series";
  source.max_bits = s.precision_bits();
  source.at_bits = [s](int bits) {
    if (bits > s.precision_bits()) {
      throw DomainError("series is only available at " + std::to_string(s.precision_bits()) + " bits");
    }
    return s;
  };
  return guess_ode(source, cfg);
}

XReal verify_relation(const PowerSeries& s, const OdeCandidate& c) {
  s.validate();
  const int bits = s.precision_bits();
  const int rows = s.order() + 1 - c.r;
  if (rows <= c.fit_rows) throw DomainError("verify_relation: series too short for the held-out block");
  auto mul = [&](const XReal& x, long k) { return k == 0 ? XReal::zero(bits) : x * k; };
  XReal worst = XReal::zero(bits);
  for (int n = c.fit_rows; n < rows; ++n) {
    XReal sum = XReal::zero(bits);
    for (int i = 0; i <= c.r; ++i) {
      for (int j = 0; j <= c.d; ++j) {
        const XReal& p = c.poly_coeffs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (p.is_zero() || n < j) continue;
        sum.fma_add(p, entry(s.coeffs, n, i, j, mul));
      }
    }
    // Normalized by the largest coefficient the equation touches.
    XReal scale = XReal::zero(bits);
    for (int k = std::max(0, n - c.d); k <= n + c.r; ++k) scale = max(scale, abs(s.coeffs[static_cast<std::size_t>(k)]));
    if (!scale.is_zero()) worst = max(worst, abs(sum) / scale);
  }
  return worst;
}

// --- controls -------------------------------------------------------------

std::vector<mpq_class> rational_exp(int n) {
  std::vector<mpq_class> a;
  mpz_class fact = 1;
  for (int k = 0; k < n; ++k) {
    if (k > 0) fact *= k;
    a.emplace_back(mpz_class(1), fact);
    a.back().canonicalize();
  }
  return a;
}

std::vector<mpq_class> rational_log1p(int n) {
  std::vector<mpq_class> a(static_cast<std::size_t>(n));
  for (int k = 1; k < n; ++k) {
    a[static_cast<std::size_t>(k)] = mpq_class(k % 2 == 1 ? 1 : -1, k);
    a[static_cast<std::size_t>(k)].canonicalize();
  }
  return a;
}

std::vector<mpq_class> rational_sqrt1p(int n) {
  std::vector<mpq_class> a;
  mpq_class c = 1;
  const mpq_class half(1, 2);
  for (int k = 0; k < n; ++k) {
    if (k > 0) c = c * (half - (k - 1)) / k;
    a.push_back(c);
  }
  return a;
}

std::vector<mpq_class> rational_erf_type(int n) {
  std::vector<mpq_class> a(static_cast<std::size_t>(n));
  mpz_class fact = 1;
  for (int m = 0; 2 * m + 1 < n; ++m) {
    if (m > 0) fact *= m;
    mpq_class v(m % 2 == 0 ? 1 : -1);
    v /= fact * (2 * m + 1);
    a[static_cast<std::size_t>(2 * m + 1)] = v;
  }
  return a;
}

std::vector<mpq_class> rational_exp_sqrt1p(int n) {
  const auto e = rational_exp(n);
  const auto s = rational_sqrt1p(n);
  std::vector<mpq_class> a(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i <= k; ++i) a[static_cast<std::size_t>(k)] += e[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(k - i)];
  }
  return a;
}

std::vector<mpq_class> rational_tan(int n) {
  // y' = 1 + y^2
  std::vector<mpq_class> t(static_cast<std::size_t>(n));
  for (int k = 0; k + 1 < n; ++k) {
    mpq_class acc = k == 0 ? 1 : 0;
    for (int i = 0; i <= k; ++i) acc += t[static_cast<std::size_t>(i)] * t[static_cast<std::size_t>(k - i)];
    t[static_cast<std::size_t>(k + 1)] = acc / (k + 1);
  }
  return t;
}

std::vector<mpq_class> rational_exp_exp_reduced(int n) {
  // Bell numbers from the Bell triangle.
  std::vector<mpz_class> bell{1};
  std::vector<mpz_class> row{1};
  while (static_cast<int>(bell.size()) < n) {
    std::vector<mpz_class> next{row.back()};
    for (const mpz_class& x : row) next.push_back(next.back() + x);
    row = std::move(next);
    bell.push_back(row.front());
  }
  std::vector<mpq_class> a(static_cast<std::size_t>(n));
  mpz_class fact = 1;
  for (int k = 1; k < n; ++k) {
    fact *= k;
    a[static_cast<std::size_t>(k)] = mpq_class(bell[static_cast<std::size_t>(k)], fact);
    a[static_cast<std::size_t>(k)].canonicalize();
  }
  return a;
}

PowerSeries series_from_rational(const std::vector<mpq_class>& coeffs, int bits) {
  if (coeffs.empty()) throw DomainError("series_from_rational: no coefficients");
  PowerSeries s = PowerSeries::constant(XReal::zero(bits), XReal::zero(bits), static_cast<int>(coeffs.size()) - 1);
  for (std::size_t k = 0; k < coeffs.size(); ++k) s.coeffs[k] = XReal::from_mpq(coeffs[k].get_mpq_t(), bits);
  return s;
}

namespace {

SeriesSource rational_source(std::string name, std::vector<mpq_class> coeffs) {
  SeriesSource src;
  src.name = std::move(name);
  src.rational = coeffs;
  src.at_bits = [coeffs = std::move(coeffs)](int bits) { return series_from_rational(coeffs, bits); };
  return src;
}

}  // namespace

SeriesSource f_series_source(int n_coeffs, const XReal& maturity) {
  if (n_coeffs < 2) throw DomainError("f_series_source: n_coeffs must be >= 2");
  SeriesSource src;
  src.name = "f";
  src.at_bits = [n_coeffs, maturity](int bits) {
    return series_f_direct(n_coeffs - 1, XReal(maturity, bits), PrecisionConfig::for_bits(bits));
  };
  return src;
}

SeriesSource finv_series_source(int n_coeffs) {
  if (n_coeffs < 2) throw DomainError("finv_series_source: n_coeffs must be >= 2");
  SeriesSource src;
  src.name = "F_inv";
  src.at_bits = [n_coeffs](int bits) {
    const PrecisionConfig cfg = PrecisionConfig::for_bits(bits);
    const XReal y0 = 1L / ldexp(XReal::e(bits), 1);
    return series_reverse(series_F(F_inv(y0, cfg), n_coeffs - 1, cfg));
  };
  return src;
}

std::vector<ControlCase> control_cases() {
  constexpr int kPositive = 60;
  constexpr int kNegative = 120;
  std::vector<ControlCase> cases;
  cases.push_back({"exp", rational_source("exp", rational_exp(kPositive)), GuessStatus::Found,
                   std::vector<std::vector<long>>{{-1}, {1}}, kPositive});
  cases.push_back({"log(1+x)", rational_source("log(1+x)", rational_log1p(kPositive)), GuessStatus::Found,
                   std::vector<std::vector<long>>{{0, 0}, {1, 0}, {1, 1}}, kPositive});
  cases.push_back({"sqrt(1+x)", rational_source("sqrt(1+x)", rational_sqrt1p(kPositive)), GuessStatus::Found,
                   std::vector<std::vector<long>>{{-1, 0}, {2, 2}}, kPositive});
  cases.push_back({"erf-type", rational_source("erf-type", rational_erf_type(kPositive)), GuessStatus::Found,
                   std::vector<std::vector<long>>{{0, 0}, {0, 2}, {1, 0}}, kPositive});
  cases.push_back({"exp(x)*sqrt(1+x)", rational_source("exp(x)*sqrt(1+x)", rational_exp_sqrt1p(kPositive)),
                   GuessStatus::Found, std::vector<std::vector<long>>{{-3, -2}, {2, 2}}, kPositive});
  cases.push_back({"tan", rational_source("tan", rational_tan(kNegative)), GuessStatus::NoneUpToBounds, std::nullopt,
                   kNegative});

  // exp(exp(x)) - e in floating point; the exact path runs on the series / e.
  SeriesSource ee = rational_source("exp(exp(x))-e", rational_exp_exp_reduced(kNegative));
  ee.at_bits = [reduced = *ee.rational](int bits) { return series_from_rational(reduced, bits) * XReal::e(bits); };
  cases.push_back({"exp(exp(x))-e", std::move(ee), GuessStatus::NoneUpToBounds, std::nullopt, kNegative});
  return cases;
}

bool same_relation(const std::vector<std::vector<mpq_class>>& exact, const std::vector<std::vector<long>>& known) {
  if (exact.size() != known.size()) return false;
  std::optional<mpq_class> ratio;
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (exact[i].size() != known[i].size()) return false;
    for (std::size_t j = 0; j < known[i].size(); ++j) {
      if (known[i][j] == 0) {
        if (sgn(exact[i][j]) != 0) return false;
        continue;
      }
      const mpq_class q = exact[i][j] / known[i][j];
      if (!ratio) ratio = q;
      if (q != *ratio) return false;
    }
  }
  return ratio && sgn(*ratio) != 0;
}

ControlSuiteReport control_suite(const GuessConfig& cfg) {
  ControlSuiteReport suite;
  suite.pass = true;
  for (ControlCase& c : control_cases()) {
    GuessConfig local = cfg;
    local.n_coeffs = c.n_coeffs;
    ControlOutcome outcome{c.name, c.expected, guess_ode(c.source, local), false, ""};
    const GuessReport& rep = outcome.report;
    if (rep.status != c.expected) {
      outcome.reason = "status " + std::string(to_string(rep.status)) + ", expected " + std::string(to_string(c.expected));
    } else if (c.expected == GuessStatus::Found) {
      if (!rep.exact || !rep.exact->relation || !rep.exact->relation->exact) {
        outcome.reason = "exact path found no relation";
      } else if (c.known && !same_relation(*rep.exact->relation->exact, *c.known)) {
        outcome.reason = "exact relation differs from the known minimal relation";
      } else if (rep.candidate->r != rep.exact->relation->r || rep.candidate->d != rep.exact->relation->d) {
        outcome.reason = "float and exact paths disagree on (r, d)";
      } else {
        outcome.pass = true;
      }
    } else if (rep.exact && rep.exact->relation) {
      outcome.reason = "exact path found a relation";
    } else {
      outcome.pass = true;
    }
    suite.pass = suite.pass && outcome.pass;
    suite.outcomes.push_back(std::move(outcome));
  }
  return suite;
}

}  // namespace impvol
