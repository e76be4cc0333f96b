#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "impvol/cli.hpp"
#include "impvol/expression.hpp"
#include "impvol/report.hpp"

using namespace impvol;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

XReal R(const std::string& s, int bits = 256) { return XReal::from_string(s, bits); }

const Json& find_check(const Json& report, const std::string& name) {
  for (const Json& c : report["checks"]) {
    if (c["name"] == name) return c;
  }
  FAIL("missing check " << name);
  return report;
}

std::string temp_path(const std::string& name) { return "/tmp/impvol_test_cli_" + name; }

}  // namespace

TEST_CASE("expression parser") {
  const int b = 256;
  const XReal e = XReal::e(b);
  CHECK(parse_expression("1/(2e)", b) == 1L / (2L * e));
  CHECK(parse_expression("2e-1", b) == R("0.2"));
  CHECK(parse_expression("2e", b) == 2L * e);
  CHECK(parse_expression("2^3^2", b) == XReal(512L, b));
  CHECK(parse_expression("-2^2", b) == XReal(-4L, b));
  CHECK(parse_expression("3(1+1)", b) == XReal(6L, b));
  CHECK(parse_expression(" 2 pi ", b) == 2L * XReal::pi(b));
  CHECK(parse_expression("1/2 - 1/(4e)", b) == R("0.5") - 1L / (4L * e));
  CHECK(parse_expression("4^0.5", b) == XReal(2L, b));
  CHECK(parse_expression(".5e+1", b) == XReal(5L, b));
  CHECK(parse_expression("0.1", 512) == R("0.1", 512));
  for (const char* bad : {"", "1/0", "(1", "foo", "1+", "2^", "(-1)^0.5", "1 2 )", "."}) {
    INFO(bad);
    CHECK_THROWS_AS(parse_expression(bad, b), DomainError);
  }
}

TEST_CASE("price report schema and closed/roper agreement") {
  const Run r = run({"price", "-S", "1", "-K", "1", "--sigma", "0.2", "--method", "both"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  for (const char* key : {"manifest", "kind", "inputs", "outputs", "checks"}) CHECK(j.contains(key));
  CHECK(j["kind"] == "price");
  CHECK(j["manifest"]["command"] == "price");
  CHECK(j["manifest"]["precision"]["working_bits"] == 256);
  CHECK(j["manifest"]["parameters"]["sigma"] == "0.2");
  CHECK(j["manifest"].contains("duration_seconds"));
  CHECK(j["outputs"]["precision_bits"] == 256);
  CHECK(j["outputs"]["price_closed"].is_string());
  const Json& c = find_check(j, "closed_vs_roper");
  CHECK(c["pass"] == true);
  CHECK(R(c["value"]) <= 4L * XReal(0x1p-120, 256));
}

TEST_CASE("deep out-of-the-money price keeps all digits") {
  const Run r = run({"price", "-S", "1", "-K", "2", "--sigma", "0.01"});
  REQUIRE(r.code == kExitOk);
  const std::string price = r.json()["outputs"]["price_closed"];
  CHECK(R(price) > 0L);
  CHECK(R(price) < R("1e-1000"));
  CHECK(price.size() >= 75);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({"price", "-S", "1", "-K", "1", "--sigma", "0"}).code == kExitUsage);
  CHECK(run({"price", "-S", "1", "-K", "1"}).code == kExitUsage);
  CHECK(run({"nonsense"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"--format", "xml", "F", "-x", "1"}).code == kExitUsage);
  CHECK(run({"F", "-x", "1+"}).code == kExitUsage);
  CHECK(run({"asympt", "--kind", "BOGUS"}).code == kExitUsage);
  CHECK(run({"series", "--target", "G", "--order", "3"}).code == kExitUsage);
  CHECK(run({"guess", "--target", "g"}).code == kExitUsage);
  CHECK(run({"-T", "0", "F", "-x", "1"}).code == kExitUsage);
  const Run bound = run({"implied-vol", "-S", "1", "-K", "1", "-c", "1"});
  CHECK(bound.code == kExitUsage);
  CHECK(bound.err.find("(S-K)^+ < c < S") != std::string::npos);
  const Run f = run({"f", "-K", "1/e"});
  CHECK(f.code == kExitUsage);
  CHECK(f.err.find("1/e") != std::string::npos);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("implied vol round trip through the CLI") {
  const Run p = run({"price", "-S", "1", "-K", "1.2", "--sigma", "0.3", "-T", "2"});
  REQUIRE(p.code == kExitOk);
  const std::string c = p.json()["outputs"]["price_closed"];
  const Run iv = run({"-T", "2", "implied-vol", "-S", "1", "-K", "1.2", "-c", c});
  REQUIRE(iv.code == kExitOk);
  CHECK(abs(R(iv.json()["outputs"]["sigma"]) - R("0.3")) <= R("1e-60"));
}

TEST_CASE("f consistency line and F_inv round trip") {
  const Run f = run({"f", "-K", "1/(2e)"});
  REQUIRE(f.code == kExitOk);
  CHECK(find_check(f.json(), "sqrt(T)*f - F_inv")["pass"] == true);
  const Run f4 = run({"-T", "4", "f", "-K", "1/(2e)"});
  REQUIRE(f4.code == kExitOk);
  CHECK(abs(2L * R(f4.json()["outputs"]["f"]) - R(f.json()["outputs"]["F_inv"])) <= R("1e-60"));

  const Run inv = run({"F-inv", "-y", "1/(2e)"});
  REQUIRE(inv.code == kExitOk);
  const std::string x = inv.json()["outputs"]["x"];
  const Run back = run({"F", "-x", x});
  REQUIRE(back.code == kExitOk);
  const XReal y = 1L / (2L * XReal::e(256));
  CHECK(abs(R(back.json()["outputs"]["F"]) - y) <= y * R("1e-60"));
}

TEST_CASE("asymptotic check as csv") {
  const Run r = run({"--format", "csv", "--digits", "10", "asympt", "--kind", "N_PRIME_REMAINDER"});
  REQUIRE(r.code == kExitOk);
  std::istringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "x,observed");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == 8);
  const Run custom = run({"asympt", "--kind", "F_LOG", "--grid-min", "0.1", "--grid-max", "0.2", "--points", "3"});
  REQUIRE(custom.code == kExitOk);
  CHECK(custom.json()["outputs"]["points"].size() == 3);
}

TEST_CASE("series output and the gamma_000 cross-check") {
  const Run i3 = run({"series", "--target", "I3", "--order", "3"});
  REQUIRE(i3.code == kExitOk);
  const Json j = i3.json();
  CHECK(j["outputs"]["coefficients"].size() == 20);
  const std::string g000 = j["outputs"]["coefficients"][0]["value"];
  const Run iv = run({"implied-vol", "-S", "1/2", "-K", "1/(2e)", "-c", "1/2 - 1/(4e)"});
  REQUIRE(iv.code == kExitOk);
  CHECK(abs(R(g000) - R(iv.json()["outputs"]["sigma"])) <= R("1e-70"));

  const Run f = run({"series", "--target", "f", "--order", "4"});
  const Run finv = run({"series", "--target", "Finv", "--order", "4"});
  REQUIRE(f.code == kExitOk);
  REQUIRE(finv.code == kExitOk);
  for (int k = 0; k <= 4; ++k) {
    CHECK(abs(R(f.json()["outputs"]["coefficients"][k]) - R(finv.json()["outputs"]["coefficients"][k])) <= R("1e-60"));
  }
  CHECK(run({"series", "--target", "f", "--order", "4", "--center", "0.2"}).code == kExitUsage);
}

TEST_CASE("guess from a coefficient file") {
  const std::string path = temp_path("exp.txt");
  {
    std::ofstream f(path);
    f << "# exp(x)\n1\n";
    std::string fact = "1";
    for (int k = 1; k < 40; ++k) {
      fact += "*" + std::to_string(k);
      f << "1/(" << fact << ")\n";
    }
  }
  const Run r = run({"--bits", "512", "guess", "--target", "file", "--file", path, "--rmax", "2", "--dmax", "2", "--ncoeffs", "40"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j["outputs"]["status"] == "FOUND");
  CHECK(j["outputs"]["candidate"]["r"] == 1);
  CHECK(j["outputs"]["candidate"]["d"] == 0);
  CHECK(j["outputs"]["exact"].is_null());
  std::remove(path.c_str());
}

TEST_CASE("precision exhaustion exits 3") {
  const std::string path = temp_path("noisy.txt");
  {
    std::ofstream f(path);
    std::string fact = "1";
    f << "1\n";
    for (int k = 1; k < 40; ++k) {
      fact += "*" + std::to_string(k);
      f << "1/(" << fact << ")" << (k % 3 == 1 ? "*(1+2^-90)" : "") << "\n";
    }
  }
  const Run r = run({"guess", "--target", "file", "--file", path, "--rmax", "1", "--dmax", "2", "--ncoeffs", "40"});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("working_bits >= 512") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("guess on f reports its bounds") {
  const Run r = run({"guess", "--target", "f", "--rmax", "1", "--dmax", "2", "--ncoeffs", "24"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j["outputs"]["status"] == "NONE_UP_TO_BOUNDS");
  CHECK(j["outputs"]["config"]["r_max"] == 1);
  CHECK(j["outputs"]["cells"].size() == 3);
  CHECK(j["outputs"]["note"].get<std::string>().find("not known to be rational") != std::string::npos);
}

TEST_CASE("reruns are identical apart from durations and --out writes the report") {
  const std::vector<std::string> args{"--format", "json", "series", "--target", "F", "--order", "5", "--center", "1/2"};
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE(a.code == kExitOk);
  CHECK(strip_durations(a.json()).dump() == strip_durations(b.json()).dump());
  CHECK_FALSE(strip_durations(a.json())["manifest"].contains("duration_seconds"));

  const std::string path = temp_path("out.json");
  std::vector<std::string> with_out{"--out", path};
  with_out.insert(with_out.end(), args.begin(), args.end());
  const Run c = run(with_out);
  CHECK(c.code == kExitOk);
  CHECK(c.out.empty());
  std::ifstream f(path);
  std::stringstream text;
  text << f.rdbuf();
  CHECK(strip_durations(Json::parse(text.str())).dump() != "");
  CHECK(strip_durations(Json::parse(text.str()))["outputs"] == strip_durations(a.json())["outputs"]);
  std::remove(path.c_str());
}

TEST_CASE("text format") {
  const Run r = run({"--format", "text", "--digits", "12", "F", "-x", "1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("F (256 bits)", 0) == 0);
  CHECK(r.out.find("out  F = ") != std::string::npos);
}
