#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "impvol/report.hpp"

namespace impvol {

/// fast runs every acceptance check on reduced grids and lattices; full runs
/// them at their stated sizes.
enum class SuiteLevel { Fast, Full };

std::string_view to_string(SuiteLevel level);
std::optional<SuiteLevel> parse_suite_level(std::string_view name);

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  Json details = Json::object();
  double duration_seconds = 0;

  bool pass() const;
};

using Progress = std::function<void(const std::string&)>;

CriterionResult criterion_pricer_equivalence(SuiteLevel level);
CriterionResult criterion_round_trip(SuiteLevel level);
CriterionResult criterion_two_path_identity(SuiteLevel level);
CriterionResult criterion_integral_identity(SuiteLevel level);
CriterionResult criterion_asymptotic_orders(SuiteLevel level);
CriterionResult criterion_series_pipelines(SuiteLevel level);
CriterionResult criterion_positive_controls(SuiteLevel level);
CriterionResult criterion_negative_evidence(SuiteLevel level);

/// Criteria 1 through 8 in order.
std::vector<CriterionResult> run_suite(SuiteLevel level, const Progress& progress = {});

Report suite_report(const std::vector<CriterionResult>& results, SuiteLevel level);

}  // namespace impvol
