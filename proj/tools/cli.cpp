#include "impvol/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "impvol/expression.hpp"
#include "impvol/suite.hpp"

namespace impvol {

namespace {

struct Globals {
  int bits = 256;
  std::string out;
  std::string format = "json";
  std::string maturity = "1";
  int digits = 30;
};

struct Context {
  Globals g;
  PrecisionConfig cfg;
  XReal maturity;

  XReal parse(const std::string& flag, const std::string& text) const {
    try {
      return parse_expression(text, cfg.working_bits);
    } catch (const DomainError& e) {
      throw DomainError("--" + flag + ": " + e.what());
    }
  }
};

Json describe_options(const CLI::App& app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "version") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 ? Json(res.front()) : Json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

XReal require_positive(const Context& ctx, const std::string& flag, const std::string& text) {
  XReal v = ctx.parse(flag, text);
  if (!(v > 0L)) throw DomainError("--" + flag + " must be positive, got " + text);
  return v;
}

Check residual_check(std::string name, const XReal& value, const XReal& threshold) { return check_le(std::move(name), value, threshold); }

// --- commands --------------------------------------------------------------

struct PriceArgs {
  std::string spot, strike, sigma, method = "closed";
};

Report cmd_price(const Context& ctx, const PriceArgs& a) {
  const VolPoint p{require_positive(ctx, "spot", a.spot), require_positive(ctx, "strike", a.strike), ctx.maturity,
                   require_positive(ctx, "sigma", a.sigma)};
  Report r;
  r.kind = "price";
  Report::put(r.inputs, "spot", p.spot);
  Report::put(r.inputs, "strike", p.strike);
  Report::put(r.inputs, "maturity", p.maturity);
  Report::put(r.inputs, "sigma", p.sigma);
  r.inputs["method"] = a.method;
  std::optional<XReal> closed, roper;
  if (a.method != "roper") {
    closed = bs_price(p);
    Report::put(r.outputs, "price_closed", *closed);
  }
  if (a.method != "closed") {
    roper = bs_price_roper(p, ctx.cfg);
    Report::put(r.outputs, "price_roper", *roper);
  }
  if (closed && roper) {
    const XReal diff = abs(*closed - *roper);
    Report::put(r.outputs, "difference", diff);
    r.checks.push_back(residual_check("closed_vs_roper", diff, 4L * ctx.cfg.quad_tol() * p.spot));
  }
  return r;
}

struct QuoteArgs {
  std::string spot, strike, price;
};

Report cmd_implied_vol(const Context& ctx, const QuoteArgs& a) {
  const Quote q{require_positive(ctx, "spot", a.spot), require_positive(ctx, "strike", a.strike), ctx.maturity,
                ctx.parse("price", a.price)};
  const ImpliedVolResult res = implied_vol_detailed(q, ctx.cfg);
  Report r;
  r.kind = "implied-vol";
  Report::put(r.inputs, "spot", q.spot);
  Report::put(r.inputs, "strike", q.strike);
  Report::put(r.inputs, "maturity", q.maturity);
  Report::put(r.inputs, "price", q.call_price);
  Report::put(r.outputs, "sigma", res.sigma);
  Report::put(r.outputs, "repricing_residual", res.residual);
  r.outputs["iterations"] = res.iterations;
  // What a sigma error at the root tolerance moves the price by, plus rounding.
  const XReal v = vega({q.spot, q.strike, q.maturity, res.sigma});
  const XReal limit = 4L * v * res.sigma * ctx.cfg.root_tol() + ldexp(q.spot, 8 - ctx.cfg.working_bits);
  r.checks.push_back(residual_check("repricing_residual", abs(res.residual), limit));
  return r;
}

Report cmd_f(const Context& ctx, const std::string& strike) {
  const SpecializationPoint p{ctx.parse("strike", strike), ctx.maturity};
  p.validate();
  const XReal f = f_eval(p, ctx.cfg);
  const XReal inv = F_inv(p.strike, ctx.cfg);
  const XReal gap = abs(sqrt(p.maturity) * f - inv);
  Report r;
  r.kind = "f";
  Report::put(r.inputs, "strike", p.strike);
  Report::put(r.inputs, "maturity", p.maturity);
  Report::put(r.outputs, "f", f);
  Report::put(r.outputs, "F_inv", inv);
  Report::put(r.outputs, "consistency", gap);
  r.checks.push_back(residual_check("sqrt(T)*f - F_inv", gap, 16L * ctx.cfg.root_tol() * inv));
  return r;
}

Report cmd_F(const Context& ctx, const std::string& x_text) {
  const XReal x = require_positive(ctx, "x", x_text);
  Report r;
  r.kind = "F";
  Report::put(r.inputs, "x", x);
  Report::put(r.outputs, "F", F_eval(x, ctx.cfg));
  Report::put(r.outputs, "F_prime", F_derivative(x));
  return r;
}

Report cmd_F_inv(const Context& ctx, const std::string& y_text) {
  const XReal y = ctx.parse("y", y_text);
  const XReal x = F_inv(y, ctx.cfg);
  const XReal back = F_eval(x, ctx.cfg);
  Report r;
  r.kind = "F-inv";
  Report::put(r.inputs, "y", y);
  Report::put(r.outputs, "x", x);
  Report::put(r.outputs, "round_trip", abs(back - y));
  r.checks.push_back(residual_check("F(F_inv(y)) - y", abs(back - y), 65536L * ctx.cfg.root_tol() * y));
  return r;
}

struct AsymptArgs {
  std::string kind, grid_min, grid_max;
  int points = 8;
};

Report cmd_asympt(const Context& ctx, const AsymptArgs& a) {
  const std::optional<CheckKind> kind = parse_check_kind(a.kind);
  if (!kind) throw DomainError("--kind: unknown check kind " + a.kind);
  std::vector<XReal> grid;
  if (a.grid_min.empty() != a.grid_max.empty()) throw DomainError("--grid-min and --grid-max go together");
  if (a.grid_min.empty()) {
    grid = default_grid(*kind, ctx.cfg.working_bits);
  } else {
    if (a.points < 1) throw DomainError("--points must be >= 1");
    const XReal lo = require_positive(ctx, "grid-min", a.grid_min);
    const XReal hi = require_positive(ctx, "grid-max", a.grid_max);
    if (hi < lo) throw DomainError("--grid-max is below --grid-min");
    for (int i = 0; i < a.points; ++i) {
      grid.push_back(a.points == 1 ? lo : exp(log(lo) + (log(hi) - log(lo)) * static_cast<long>(i) / static_cast<long>(a.points - 1)));
    }
  }
  const AsymptoticReport rep = run_check(*kind, grid, ctx.cfg);
  Report r;
  r.kind = "asympt";
  r.inputs["kind"] = std::string(to_string(*kind));
  r.inputs["points"] = static_cast<long>(grid.size());
  r.outputs = to_json(rep);
  r.table_header = {is_inverse_kind(*kind) ? "y" : "x", "observed"};
  for (std::size_t i = 0; i < rep.grid.size(); ++i) r.table_rows.push_back({decimal(rep.grid[i]), decimal(rep.observed[i])});
  r.checks.push_back(check_equal(std::string(to_string(*kind)) + ".pass", rep.pass ? "true" : "false", "true"));
  return r;
}

struct SeriesArgs {
  std::string target, center;
  int order = 8;
};

void put_series(Report& r, const PowerSeries& s) {
  Report::put(r.outputs, "center", s.center);
  Json coeffs = Json::array();
  r.table_header = {"n", "coefficient"};
  for (std::size_t n = 0; n < s.coeffs.size(); ++n) {
    coeffs.push_back(decimal(s.coeffs[n]));
    r.table_rows.push_back({std::to_string(n), decimal(s.coeffs[n])});
  }
  r.outputs["coefficients"] = std::move(coeffs);
}

Report cmd_series(const Context& ctx, const SeriesArgs& a) {
  if (a.order < 0) throw DomainError("--order must be >= 0");
  const int bits = ctx.cfg.working_bits;
  const XReal half_over_e = 1L / ldexp(XReal::e(bits), 1);
  Report r;
  r.kind = "series";
  r.inputs["target"] = a.target;
  r.inputs["order"] = a.order;
  if (a.target == "F") {
    const XReal x0 = a.center.empty() ? XReal::one(bits) : require_positive(ctx, "center", a.center);
    put_series(r, series_F(x0, a.order, ctx.cfg));
  } else if (a.target == "Finv") {
    const XReal y0 = a.center.empty() ? half_over_e : ctx.parse("center", a.center);
    put_series(r, series_reverse(series_F(F_inv(y0, ctx.cfg), a.order, ctx.cfg)));
  } else if (a.target == "f" || a.target == "I3") {
    if (!a.center.empty()) throw DomainError("--center: target " + a.target + " is expanded at a fixed point only");
    if (a.target == "f") {
      put_series(r, series_f_direct(a.order, ctx.maturity, ctx.cfg));
    } else {
      const TriSeries t = tri_series_I(a.order, ctx.maturity, ctx.cfg);
      Json center = Json::array();
      for (const XReal& c : t.center()) center.push_back(decimal(c));
      r.outputs["center"] = std::move(center);
      r.outputs["precision_bits"] = t.precision_bits();
      Json coeffs = Json::array();
      r.table_header = {"i", "j", "k", "coefficient"};
      for (std::size_t n = 0; n < t.size(); ++n) {
        const auto& e = t.exponents(n);
        coeffs.push_back(Json{{"i", e[0]}, {"j", e[1]}, {"k", e[2]}, {"value", decimal(t.coeff(n))}});
        r.table_rows.push_back({std::to_string(e[0]), std::to_string(e[1]), std::to_string(e[2]), decimal(t.coeff(n))});
      }
      r.outputs["coefficients"] = std::move(coeffs);
      // gamma_000 is the implied volatility at the center.
      const auto& c = t.center();
      const XReal sigma = implied_vol(Quote{c[0], c[1], ctx.maturity, c[2]}, ctx.cfg);
      r.checks.push_back(residual_check("gamma_000 - implied_vol(center)", abs(t.constant_term() - sigma), 16L * ctx.cfg.root_tol() * sigma));
    }
  } else {
    throw DomainError("--target: unknown series target " + a.target + " (F, Finv, f, I3)");
  }
  Report::put(r.inputs, "maturity", ctx.maturity);
  return r;
}

struct GuessArgs {
  std::string target, file;
  int rmax = 6, dmax = 6, ncoeffs = 64, max_bits = 4096;
  double holdout = 0.1;
};

Report cmd_guess(const Context& ctx, const GuessArgs& a) {
  GuessConfig cfg;
  cfg.r_max = a.rmax;
  cfg.d_max = a.dmax;
  cfg.n_coeffs = a.ncoeffs;
  cfg.working_bits = ctx.cfg.working_bits;
  cfg.holdout_fraction = a.holdout;
  cfg.max_bits = a.max_bits;
  cfg.validate();

  GuessReport rep;
  if (a.target == "f") {
    rep = guess_ode(f_series_source(a.ncoeffs, ctx.maturity), cfg);
  } else if (a.target == "Finv") {
    rep = guess_ode(finv_series_source(a.ncoeffs), cfg);
  } else if (a.target == "file") {
    if (a.file.empty()) throw DomainError("--file is required with --target file");
    std::ifstream in(a.file);
    if (!in) throw DomainError("--file: cannot read " + a.file);
    std::vector<XReal> coeffs;
    std::string line;
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      coeffs.push_back(ctx.parse("file", line));
    }
    if (coeffs.empty()) throw DomainError("--file: no coefficients in " + a.file);
    PowerSeries s = PowerSeries::constant(XReal::zero(cfg.working_bits), XReal::zero(cfg.working_bits), static_cast<int>(coeffs.size()) - 1);
    for (std::size_t k = 0; k < coeffs.size(); ++k) s.coeffs[k] = coeffs[k];
    rep = guess_ode(s, cfg);
  } else {
    throw DomainError("--target: unknown guess target " + a.target + " (f, Finv, file)");
  }

  Report r;
  r.kind = "guess";
  r.inputs["target"] = a.target;
  if (a.target == "file") r.inputs["file"] = a.file;
  Report::put(r.inputs, "maturity", ctx.maturity);
  r.outputs = to_json(rep);
  r.checks.push_back(check_equal("conclusive", rep.status == GuessStatus::Inconclusive ? "no" : "yes", "yes"));
  if (rep.candidate) {
    r.checks.push_back(check_le("holdout_residual", rep.candidate->residual, cfg.holdout_tolerance(cfg.working_bits)));
  }
  if (rep.status == GuessStatus::NoneUpToBounds) {
    long below = 0;
    for (const LatticeCell& c : rep.cells) below += c.min_singular_ratio < cfg.reject_ratio(c.bits_used) ? 1 : 0;
    r.checks.push_back(check_count("cells_below_reject_threshold", below, 0));
  }
  return r;
}

int emit(const Report& r, RunManifest& m, const Globals& g, std::ostream& out, double seconds) {
  m.duration_seconds = seconds;
  const OutputFormat fmt = g.format == "csv" ? OutputFormat::Csv : g.format == "text" ? OutputFormat::Text : OutputFormat::Json;
  const std::string text = render(r, m, fmt, fmt == OutputFormat::Json ? 0 : g.digits);
  if (g.out.empty()) {
    out << text;
  } else {
    std::ofstream f(g.out);
    if (!f) throw DomainError("--out: cannot write " + g.out);
    f << text;
  }
  return r.all_pass() ? kExitOk : kExitChecksFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-precision implied volatility toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", tool_version());

  Globals g;
  app.add_option("--bits", g.bits, "Working precision in bits")->check(CLI::Range(kMinPrecisionBits, 1 << 20));
  app.add_option("--out", g.out, "Write the report to this file");
  app.add_option("--format", g.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("-T,--maturity", g.maturity, "Maturity in years (expression)");
  app.add_option("--digits", g.digits, "Significant digits for csv and text output")->check(CLI::Range(0, 100000));

  PriceArgs price;
  auto* sub_price = app.add_subcommand("price", "Call price, closed form and/or Roper integral");
  sub_price->add_option("-S,--spot", price.spot)->required();
  sub_price->add_option("-K,--strike", price.strike)->required();
  sub_price->add_option("--sigma", price.sigma)->required();
  sub_price->add_option("--method", price.method)->check(CLI::IsMember({"closed", "roper", "both"}));

  QuoteArgs quote;
  auto* sub_iv = app.add_subcommand("implied-vol", "Implied volatility of a call price");
  sub_iv->add_option("-S,--spot", quote.spot)->required();
  sub_iv->add_option("-K,--strike", quote.strike)->required();
  sub_iv->add_option("-c,--price", quote.price)->required();

  std::string f_strike;
  auto* sub_f = app.add_subcommand("f", "f(K) = I(eK, K, (e-1)K + eK^2)");
  sub_f->add_option("-K,--strike", f_strike)->required();

  std::string F_x;
  auto* sub_F = app.add_subcommand("F", "F(x)");
  sub_F->add_option("-x,--x", F_x)->required();

  std::string F_y;
  auto* sub_Finv = app.add_subcommand("F-inv", "Inverse of F on (0, 1/e)");
  sub_Finv->add_option("-y,--y", F_y)->required();

  AsymptArgs asympt;
  auto* sub_asympt = app.add_subcommand("asympt", "Asymptotic check near 0");
  sub_asympt->add_option("--kind", asympt.kind)->required();
  sub_asympt->add_option("--grid-min", asympt.grid_min);
  sub_asympt->add_option("--grid-max", asympt.grid_max);
  sub_asympt->add_option("--points", asympt.points);

  SeriesArgs series;
  auto* sub_series = app.add_subcommand("series", "Taylor coefficients of F, Finv, f or the trivariate I");
  sub_series->add_option("--target", series.target)->required();
  sub_series->add_option("--order", series.order)->required();
  sub_series->add_option("--center", series.center);

  GuessArgs guess;
  auto* sub_guess = app.add_subcommand("guess", "Search for a linear ODE with polynomial coefficients");
  sub_guess->add_option("--target", guess.target)->required();
  sub_guess->add_option("--file", guess.file, "One coefficient per line");
  sub_guess->add_option("--rmax", guess.rmax);
  sub_guess->add_option("--dmax", guess.dmax);
  sub_guess->add_option("--ncoeffs", guess.ncoeffs);
  sub_guess->add_option("--holdout", guess.holdout);
  sub_guess->add_option("--max-bits", guess.max_bits);

  std::string level = "fast";
  auto* sub_suite = app.add_subcommand("suite", "Run the acceptance checks");
  sub_suite->add_option("--level", level)->check(CLI::IsMember({"fast", "full"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunManifest manifest;
  manifest.command = sub->get_name();
  manifest.parameters = describe_options(app);
  const Json sub_params = describe_options(*sub);
  for (auto it = sub_params.begin(); it != sub_params.end(); ++it) manifest.parameters[it.key()] = it.value();
  manifest.tool_version = tool_version();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    Context ctx{g, PrecisionConfig::for_bits(g.bits), XReal()};
    ctx.cfg.validate();
    manifest.precision = ctx.cfg;
    ctx.maturity = require_positive(ctx, "maturity", g.maturity);

    Report report;
    if (sub == sub_price) {
      report = cmd_price(ctx, price);
    } else if (sub == sub_iv) {
      report = cmd_implied_vol(ctx, quote);
    } else if (sub == sub_f) {
      report = cmd_f(ctx, f_strike);
    } else if (sub == sub_F) {
      report = cmd_F(ctx, F_x);
    } else if (sub == sub_Finv) {
      report = cmd_F_inv(ctx, F_y);
    } else if (sub == sub_asympt) {
      report = cmd_asympt(ctx, asympt);
    } else if (sub == sub_series) {
      report = cmd_series(ctx, series);
    } else if (sub == sub_guess) {
      report = cmd_guess(ctx, guess);
    } else {
      const SuiteLevel lvl = *parse_suite_level(level);
      const auto results = run_suite(lvl, [&err](const std::string& line) { err << line << std::endl; });
      report = suite_report(results, lvl);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return emit(report, manifest, g, out, seconds);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace impvol
