#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "impvol/asymptotic_lab.hpp"
#include "impvol/dfinite_guesser.hpp"

namespace impvol {

using Json = nlohmann::ordered_json;

enum class OutputFormat { Json, Csv, Text };

/// Decimal string with `digits` significant digits; 0 means all digits the
/// value's precision supports.
std::string decimal(const XReal& x, int digits = 0);

struct Check {
  std::string name;
  std::string value;
  std::string threshold;
  bool pass = false;
  int precision_bits = 0;
};

Check check_le(std::string name, const XReal& value, const XReal& threshold);
Check check_ge(std::string name, const XReal& value, const XReal& threshold);
/// Passes when |value - target| <= band.
Check check_within(std::string name, double value, double target, double band);
Check check_equal(std::string name, const std::string& value, const std::string& expected);
Check check_count(std::string name, long value, long maximum);

struct RunManifest {
  std::string command;
  Json parameters = Json::object();
  PrecisionConfig precision;
  std::string tool_version;
  double duration_seconds = 0;
};

struct Report {
  std::string kind;
  Json inputs = Json::object();
  Json outputs = Json::object();
  std::vector<Check> checks;
  /// Grid data for CSV output: header, then rows of decimal strings.
  std::vector<std::string> table_header;
  std::vector<std::vector<std::string>> table_rows;

  bool all_pass() const;
  /// obj[key] = decimal string of x plus a "precision_bits" sibling.
  static void put(Json& obj, const std::string& key, const XReal& x);
};

std::string tool_version();

Json to_json(const Report& report, const RunManifest& manifest);
std::string render(const Report& report, const RunManifest& manifest, OutputFormat format, int digits);

/// Drops every "duration_seconds" member and every check whose name ends in
/// "duration_seconds", for comparing reruns.
Json strip_durations(Json j);

Json to_json(const PrecisionConfig& cfg);
Json to_json(const GuessReport& report);
Json to_json(const OdeCandidate& c);
Json to_json(const AsymptoticReport& report);

}  // namespace impvol
