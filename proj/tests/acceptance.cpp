// Acceptance run: `impvol suite --level full` twice. Prints one line per
// criterion; criterion 9 compares the two JSON reports without durations.

#include <iostream>
#include <sstream>
#include <string>

#include "impvol/cli.hpp"
#include "impvol/report.hpp"

using impvol::Json;

namespace {

struct SuiteRun {
  int code = -1;
  Json report;
};

SuiteRun run_full_suite() {
  std::ostringstream out;
  SuiteRun r;
  r.code = impvol::run_cli({"suite", "--level", "full"}, out, std::cerr);
  r.report = Json::parse(out.str());
  return r;
}

}  // namespace

int main() {
  std::cerr << "-- suite run 1\n";
  const SuiteRun first = run_full_suite();
  std::cerr << "-- suite run 2\n";
  const SuiteRun second = run_full_suite();

  bool all = true;
  for (const Json& c : first.report["outputs"]["criteria"]) {
    const int id = c["id"];
    const bool pass = c["pass"];
    all = all && pass;
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << c["title"].get<std::string>() << " ("
              << c["duration_seconds"].get<std::string>() << " s)\n";
    const std::string tag = "c" + std::to_string(id) + ".";
    for (const Json& check : first.report["checks"]) {
      const std::string name = check["name"];
      if (name.rfind(tag, 0) != 0) continue;
      std::cout << "    " << (check["pass"].get<bool>() ? "ok   " : "FAIL ") << name << " = " << check["value"].get<std::string>()
                << "  (threshold " << check["threshold"].get<std::string>() << ")\n";
    }
    for (const Json& note : c["notes"]) std::cout << "    note: " << note.get<std::string>() << '\n';
  }

  const std::string a = impvol::strip_durations(first.report).dump();
  const std::string b = impvol::strip_durations(second.report).dump();
  const bool same = a == b && first.code == second.code;
  all = all && same;
  std::cout << "criterion 9: " << (same ? "PASS" : "FAIL") << "  two full suite runs give identical JSON apart from durations ("
            << a.size() << " bytes)\n";
  std::cout << (all ? "acceptance: all criteria pass\n" : "acceptance: some criteria fail\n");
  return all ? 0 : 1;
}
