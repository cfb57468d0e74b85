#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <string>

#include "commwidth.h"

#include "doctest.h"
#include "json.hpp"

namespace {

const char* kShiftSpec = R"({
  "schema": "1",
  "fiber": "point",
  "map": {"kind": "vertical_pl", "breakpoints": [[0.0, 1.0], [1.0, 2.0]]}
})";

const char* kTripleSpec = R"({
  "schema": "1",
  "fiber": "point",
  "map": {"kind": "vertical_pl", "breakpoints": [[0.0, 3.0], [1.0, 4.0]]}
})";

std::string cert_text(cw_certificate* cert) {
  char* out = nullptr;
  REQUIRE(cw_cert_to_json(cert, &out) == 0);
  std::string text(out);
  cw_string_free(out);
  return text;
}

}  // namespace

TEST_CASE("factor emits a passing certificate") {
  cw_certificate* cert = nullptr;
  int status = cw_factor(kShiftSpec, nullptr, &cert);
  REQUIRE(status == 0);
  REQUIRE(cert != nullptr);
  CHECK(cw_cert_pass(cert) == 1);

  std::string text = cert_text(cert);
  auto j = nlohmann::json::parse(text);
  CHECK(j["kind"] == "commutator");
  CHECK(j["report"]["pass"] == true);

  // Re-verification of the emitted certificate agrees.
  char* report = nullptr;
  CHECK(cw_verify(text.c_str(), &report) == 0);
  auto rep = nlohmann::json::parse(report);
  CHECK(rep["pass"] == true);
  cw_string_free(report);

  // Plotting succeeds and yields SVG markup.
  char* svg = nullptr;
  CHECK(cw_plot(text.c_str(), &svg) == 0);
  CHECK(std::strstr(svg, "<svg") != nullptr);
  cw_string_free(svg);

  cw_cert_free(cert);
}

TEST_CASE("factor is deterministic") {
  cw_certificate* c1 = nullptr;
  cw_certificate* c2 = nullptr;
  REQUIRE(cw_factor(kShiftSpec, nullptr, &c1) == 0);
  REQUIRE(cw_factor(kShiftSpec, nullptr, &c2) == 0);
  CHECK(cert_text(c1) == cert_text(c2));
  cw_cert_free(c1);
  cw_cert_free(c2);
}

TEST_CASE("invalid input returns status 2") {
  cw_certificate* cert = nullptr;
  CHECK(cw_factor("this is not json", nullptr, &cert) == 2);
  CHECK(cert == nullptr);
  CHECK(std::strlen(cw_last_error()) > 0);

  const char* bad_slope = R"({
    "schema": "1",
    "fiber": "point",
    "map": {"kind": "vertical_pl", "breakpoints": [[0.0, 1.0], [1.0, 0.0]]}
  })";
  CHECK(cw_factor(bad_slope, nullptr, &cert) == 2);

  const char* bad_schema = R"({"schema": "9", "fiber": "point", "map": {"kind": "identity"}})";
  CHECK(cw_factor(bad_schema, nullptr, &cert) == 2);
}

TEST_CASE("construction failure returns status 3") {
  const char* improper = R"({
    "schema": "1",
    "fiber": "point",
    "map": {"kind": "vertical_pl", "breakpoints": [[0.0, -20000.0], [1.0, -19999.0]]}
  })";
  cw_certificate* cert = nullptr;
  CHECK(cw_factor(improper, nullptr, &cert) == 3);
  CHECK(cert == nullptr);
}

TEST_CASE("tolerance failure returns status 4 with a certificate") {
  cw_certificate* cert = nullptr;
  int status = cw_factor(kShiftSpec, R"({"tolerance": 1e-18})", &cert);
  CHECK(status == 4);
  REQUIRE(cert != nullptr);
  CHECK(cw_cert_pass(cert) == 0);

  // Re-verification of the failing certificate also reports 4.
  std::string text = cert_text(cert);
  char* report = nullptr;
  CHECK(cw_verify(text.c_str(), &report) == 4);
  cw_string_free(report);
  cw_cert_free(cert);
}

TEST_CASE("power words through the C API") {
  cw_certificate* cert = nullptr;
  REQUIRE(cw_powers(kTripleSpec, R"({"exponents": [2, 3]})", &cert) == 0);
  auto j = nlohmann::json::parse(cert_text(cert));
  CHECK(j["kind"] == "power_word");
  CHECK(j["terms"].size() == 2);
  cw_cert_free(cert);
  cert = nullptr;

  CHECK(cw_powers(kTripleSpec, R"({"exponents": [0, 2]})", &cert) == 2);
  CHECK(cw_powers(kTripleSpec, R"({"exponents": [2]})", &cert) == 2);
  CHECK(cw_powers(kTripleSpec, nullptr, &cert) == 2);
}

TEST_CASE("verify and plot reject malformed certificates") {
  char* out = nullptr;
  CHECK(cw_verify("{}", &out) == 2);
  CHECK(cw_plot("{}", &out) == 2);
  CHECK(cw_verify("not json", &out) == 2);
}
