#include "impvol/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#ifndef IMPVOL_VERSION
#define IMPVOL_VERSION "0.0.0"
#endif

namespace impvol {

std::string decimal(const XReal& x, int digits) { return x.to_string(digits); }

namespace {

std::string shortest(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Check compare(std::string name, const XReal& value, const XReal& threshold, bool pass) {
  return {std::move(name), decimal(value, 20), decimal(threshold, 20), pass,
          std::max(value.precision_bits(), threshold.precision_bits())};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

std::string trimmed(const std::string& s, int digits) {
  if (digits <= 0) return s;
  // Shorten long decimal mantissas for display; leave anything else alone.
  const std::size_t e = s.find('e');
  const std::size_t dot = s.find('.');
  if (e == std::string::npos || dot == std::string::npos || dot > e) return s;
  const std::size_t keep = dot + static_cast<std::size_t>(digits);
  if (e <= keep) return s;
  return s.substr(0, keep) + s.substr(e);
}

}  // namespace

Check check_le(std::string name, const XReal& value, const XReal& threshold) {
  return compare(std::move(name), value, threshold, value <= threshold);
}

Check check_ge(std::string name, const XReal& value, const XReal& threshold) {
  return compare(std::move(name), value, threshold, value >= threshold);
}

Check check_within(std::string name, double value, double target, double band) {
  return {std::move(name), shortest(value), shortest(target) + " +/- " + shortest(band),
          std::abs(value - target) <= band, 53};
}

Check check_equal(std::string name, const std::string& value, const std::string& expected) {
  return {std::move(name), value, expected, value == expected, 0};
}

Check check_count(std::string name, long value, long maximum) {
  return {std::move(name), std::to_string(value), std::to_string(maximum), value <= maximum, 0};
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void Report::put(Json& obj, const std::string& key, const XReal& x) {
  int bits = x.precision_bits();
  if (obj.contains("precision_bits")) {
    bits = std::max(bits, obj["precision_bits"].get<int>());
    obj.erase("precision_bits");
  }
  obj[key] = decimal(x);
  obj["precision_bits"] = bits;
}

std::string tool_version() { return IMPVOL_VERSION; }

Json to_json(const PrecisionConfig& cfg) {
  return Json{{"working_bits", cfg.working_bits},
              {"quad_rel_tol", shortest(cfg.quad_rel_tol)},
              {"root_rel_tol", shortest(cfg.root_rel_tol)},
              {"quad_max_level", cfg.quad_max_level}};
}

Json to_json(const Report& report, const RunManifest& manifest) {
  Json checks = Json::array();
  for (const Check& c : report.checks) {
    Json j{{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}};
    if (c.precision_bits > 0) j["precision_bits"] = c.precision_bits;
    checks.push_back(std::move(j));
  }
  Json m{{"command", manifest.command},
         {"parameters", manifest.parameters},
         {"precision", to_json(manifest.precision)},
         {"tool_version", manifest.tool_version},
         {"duration_seconds", shortest(manifest.duration_seconds)}};
  return Json{{"manifest", std::move(m)},
              {"kind", report.kind},
              {"inputs", report.inputs},
              {"outputs", report.outputs},
              {"checks", std::move(checks)}};
}

std::string render(const Report& report, const RunManifest& manifest, OutputFormat format, int digits) {
  std::ostringstream os;
  switch (format) {
    case OutputFormat::Json:
      os << to_json(report, manifest).dump(2) << '\n';
      break;
    case OutputFormat::Csv: {
      if (!report.table_header.empty()) {
        for (std::size_t i = 0; i < report.table_header.size(); ++i) os << (i ? "," : "") << csv_field(report.table_header[i]);
        os << '\n';
        for (const auto& row : report.table_rows) {
          for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(trimmed(row[i], digits));
          os << '\n';
        }
      } else {
        std::vector<std::pair<std::string, std::string>> rows;
        flatten(report.outputs, "", rows);
        os << "name,value\n";
        for (const auto& [k, v] : rows) os << csv_field(k) << ',' << csv_field(trimmed(v, digits)) << '\n';
      }
      break;
    }
    case OutputFormat::Text: {
      os << report.kind << " (" << manifest.precision.working_bits << " bits)\n";
      std::vector<std::pair<std::string, std::string>> rows;
      flatten(report.inputs, "", rows);
      for (const auto& [k, v] : rows) os << "  in   " << k << " = " << trimmed(v, digits) << '\n';
      rows.clear();
      flatten(report.outputs, "", rows);
      for (const auto& [k, v] : rows) os << "  out  " << k << " = " << trimmed(v, digits) << '\n';
      for (const Check& c : report.checks) {
        os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << trimmed(c.value, digits) << " vs "
           << trimmed(c.threshold, digits) << '\n';
      }
      break;
    }
  }
  return os.str();
}

Json strip_durations(Json j) {
  if (j.is_object()) {
    j.erase("duration_seconds");
    for (auto it = j.begin(); it != j.end(); ++it) it.value() = strip_durations(it.value());
  } else if (j.is_array()) {
    Json out = Json::array();
    for (const Json& item : j) {
      if (item.is_object() && item.contains("name") && item["name"].is_string()) {
        const std::string name = item["name"].get<std::string>();
        const std::string suffix = "duration_seconds";
        if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) continue;
      }
      out.push_back(strip_durations(item));
    }
    return out;
  }
  return j;
}

Json to_json(const OdeCandidate& c) {
  Json p = Json::array();
  for (const auto& row : c.poly_coeffs) {
    Json r = Json::array();
    for (const XReal& x : row) r.push_back(decimal(x));
    p.push_back(std::move(r));
  }
  Json j{{"r", c.r}, {"d", c.d}, {"poly_coeffs", std::move(p)}, {"residual", decimal(c.residual, 20)}, {"fit_rows", c.fit_rows}};
  if (c.exact) {
    Json q = Json::array();
    for (const auto& row : *c.exact) {
      Json r = Json::array();
      for (const mpq_class& x : row) r.push_back(x.get_str());
      q.push_back(std::move(r));
    }
    j["exact"] = std::move(q);
  }
  j["precision_bits"] = c.residual.precision_bits();
  return j;
}

Json to_json(const GuessReport& report) {
  const GuessConfig& cfg = report.config;
  const int bits = cfg.working_bits;
  Json config{{"r_max", cfg.r_max},
              {"d_max", cfg.d_max},
              {"n_coeffs", cfg.n_coeffs},
              {"working_bits", cfg.working_bits},
              {"holdout_fraction", shortest(cfg.holdout_fraction)},
              {"max_bits", cfg.max_bits},
              {"accept_ratio", decimal(cfg.accept_ratio(bits), 20)},
              {"reject_ratio", decimal(cfg.reject_ratio(bits), 20)},
              {"holdout_tolerance", decimal(cfg.holdout_tolerance(bits), 20)},
              {"guard_rows", kGuardRows}};
  Json cells = Json::array();
  for (const LatticeCell& c : report.cells) {
    cells.push_back(Json{{"r", c.r},
                         {"d", c.d},
                         {"unknowns", c.unknowns},
                         {"fit_rows", c.fit_rows},
                         {"holdout_rows", c.holdout_rows},
                         {"min_singular_ratio", decimal(c.min_singular_ratio, 20)},
                         {"verdict", std::string(to_string(c.verdict))},
                         {"bits_used", c.bits_used}});
  }
  Json j{{"status", std::string(to_string(report.status))},
         {"config", std::move(config)},
         {"series_bits", report.series_bits},
         {"cells", std::move(cells)},
         {"candidate", report.candidate ? to_json(*report.candidate) : Json(nullptr)}};
  if (report.exact) {
    j["exact"] = Json{{"certified_full_rank", report.exact->certified_full_rank},
                      {"relation", report.exact->relation ? to_json(*report.exact->relation) : Json(nullptr)}};
  } else {
    j["exact"] = nullptr;
  }
  j["note"] = report.note;
  return j;
}

Json to_json(const AsymptoticReport& report) {
  Json points = Json::array();
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    points.push_back(Json{{"abscissa", decimal(report.grid[i])},
                          {"observed", decimal(report.observed[i])},
                          {"precision_bits", report.observed[i].precision_bits()}});
  }
  Json dropped = Json::array();
  for (const DroppedPoint& d : report.dropped) dropped.push_back(Json{{"abscissa", decimal(d.abscissa)}, {"reason", d.reason}});
  return Json{{"kind", std::string(to_string(report.kind))},
              {"points", std::move(points)},
              {"fitted_order", report.fitted_order ? Json(shortest(*report.fitted_order)) : Json(nullptr)},
              {"pass", report.pass},
              {"tolerance_used", shortest(report.tolerance_used)},
              {"dropped", std::move(dropped)}};
}

}  // namespace impvol
