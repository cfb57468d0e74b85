#include <cmath>

#include "commwidth/serialize.hpp"

#include "doctest.h"

using namespace cw;

TEST_CASE("fiber encoding") {
  CHECK(fiber_from_json(json("point")) == Fiber::Point);
  CHECK(fiber_from_json(json("circle")) == Fiber::Circle);
  CHECK_THROWS_AS(fiber_from_json(json("torus")), Error);
  CHECK(fiber_to_json(Fiber::Point) == json("point"));
}

TEST_CASE("map nodes round-trip through JSON") {
  json pl = {{"kind", "vertical_pl"},
             {"breakpoints", json::array({json::array({0.0, 1.0}), json::array({2.0, 4.0})})}};
  json tw = {{"kind", "twist"}, {"alpha", {{"kind", "constant"}, {"value", 0.25}}}};
  json bump = {{"kind", "fiber_bump"},
               {"band", json::array({-1.0, 1.0})},
               {"tracks", json::array({{{"in", json::array({0.0})},
                                        {"out", json::array({0.3})}}})}};
  json smooth = {{"kind", "monotone_smooth"},
                 {"knots", json::array({json::array({0.0, 0.0}), json::array({1.0, 2.0}),
                                        json::array({2.0, 3.0})})}};
  json comp = {{"kind", "compose"}, {"children", json::array({pl, tw})}};
  json inv = {{"kind", "inverse"}, {"child", pl}};

  for (const json& node : {pl, tw, bump, smooth, comp, inv}) {
    Fiber f = Fiber::Circle;
    MapPtr m = map_from_json(f, node);
    json back = map_to_json(*m);
    MapPtr m2 = map_from_json(f, back);
    // Serialized form is stable and denotes the same map.
    CHECK(map_to_json(*m2) == back);
    for (int j = 0; j < 20; ++j) {
      Pt p{static_cast<double>(j) / 20.0, -3.0 + 0.3 * j};
      CHECK(point_dist(f, eval(*m, p), eval(*m2, p)) < 1e-12);
    }
  }

  CHECK_THROWS_AS(map_from_json(Fiber::Point, json{{"kind", "mystery"}}), Error);
  CHECK_THROWS_AS(map_from_json(Fiber::Point, json("not an object")), Error);
}

TEST_CASE("spec documents round-trip byte-identically") {
  json spec = json::object();
  spec["schema"] = kSchemaVersion;
  spec["fiber"] = "point";
  spec["map"] = {{"kind", "vertical_pl"},
                 {"breakpoints", json::array({json::array({0.0, 1.0}), json::array({1.0, 2.0})})}};
  spec["options"] = {{"tolerance", 1e-6},
                     {"window", json::array({-30.0, 30.0})},
                     {"grid", json::array({1, 500})}};
  SpecDocument doc = spec_from_json(spec);
  std::string once = to_text(spec_to_json(doc));
  std::string twice = to_text(spec_to_json(spec_from_json(json::parse(once))));
  CHECK(once == twice);
  CHECK(doc.options.tolerance == 1e-6);
  CHECK(doc.options.window->lo == -30.0);
  CHECK(doc.options.grid->t_n == 500);

  json bad = spec;
  bad["schema"] = "99";
  CHECK_THROWS_AS(spec_from_json(bad), Error);
  json noslope = spec;
  noslope["map"]["breakpoints"] = json::array({json::array({0.0, 1.0}), json::array({1.0, 0.0})});
  CHECK_THROWS_AS(spec_from_json(noslope), Error);
}

TEST_CASE("reports round-trip") {
  VerificationReport rep;
  rep.window = {-50.0, 50.0};
  rep.grid = {1, 10000};
  rep.tolerance = 1e-6;
  rep.max_error = 2e-6;
  rep.pass = false;
  rep.failures.push_back({0.0, 1.5, 2e-6});
  rep.min_progress = 1;
  json j = report_to_json(rep);
  VerificationReport back = report_from_json(j);
  CHECK(report_to_json(back) == j);
  CHECK(back.max_error == rep.max_error);
  CHECK(back.failures.size() == 1);
}

TEST_CASE("suited decompositions round-trip") {
  SuitedPtr s = build_suited(
      std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 1.0}, {1.0, 2.0}})), 0, 2);
  json j = suited_to_json(*s);
  SuitedPtr back = suited_from_json(j);
  CHECK(suited_to_json(*back) == j);
  for (i64 k = s->band_lo(); k <= s->band_hi(); ++k) {
    CHECK(back->boundary(k) == s->boundary(k));
    CHECK(back->marker(k) == s->marker(k));
  }
}

TEST_CASE("commutator certificates round-trip byte-identically") {
  MapPtr f = std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 1.0}, {1.0, 2.0}}));
  CommutatorResult r = commutator_factorization(f);
  json j = cert_to_json(r.cert);
  FactorizationCertificate back = cert_from_json(j);
  // The restored certificate (conjugator pins, frozen lattices, charts
  // included) reserializes to the same bytes and makes the same claim.
  CHECK(to_text(cert_to_json(back)) == to_text(j));
  MapPtr word = claim_word(back);
  CHECK(sup_distance(*word, *back.input, back.report.window, back.report.grid) <
        back.report.tolerance);
}

TEST_CASE("power certificates round-trip") {
  MapPtr g = std::make_shared<VerticalPl>(Fiber::Point, Pl1d({{0.0, 3.0}, {1.0, 4.0}}));
  FactorizationCertificate cert = power_word_decomposition(g, {2, 3});
  json j = cert_to_json(cert);
  FactorizationCertificate back = cert_from_json(j);
  CHECK(to_text(cert_to_json(back)) == to_text(j));
  REQUIRE(back.terms.size() == 2);
  CHECK(back.terms[0].exponent == 2);
  CHECK(back.terms[1].exponent == 3);

  json truncated = j;
  truncated["terms"] = json::array({j["terms"][0]});
  CHECK_THROWS_AS(cert_from_json(truncated), Error);
  json unknown = j;
  unknown["kind"] = "sorcery";
  CHECK_THROWS_AS(cert_from_json(unknown), Error);
}
