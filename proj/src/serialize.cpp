#include "commwidth/serialize.hpp"

#include <cmath>

namespace cw {

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw Error(Err::InvalidSpec, std::string("missing field '") + key + "'");
  return *it;
}

double num(const json& j) {
  if (!j.is_number()) throw Error(Err::InvalidSpec, "expected a number");
  return j.get<double>();
}

i64 integer(const json& j) {
  if (!j.is_number_integer()) throw Error(Err::InvalidSpec, "expected an integer");
  return j.get<i64>();
}

std::vector<double> num_array(const json& j) {
  if (!j.is_array()) throw Error(Err::InvalidSpec, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(num(v));
  return out;
}

std::vector<std::pair<double, double>> pair_array(const json& j) {
  if (!j.is_array()) throw Error(Err::InvalidSpec, "expected an array of pairs");
  std::vector<std::pair<double, double>> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2)
      throw Error(Err::InvalidSpec, "expected [x, y] pairs");
    out.emplace_back(num(v[0]), num(v[1]));
  }
  return out;
}

BandChart chart_from_json(const json& j) {
  BandChart ch;
  ch.lo = num(require(j, "lo"));
  ch.hi = num(require(j, "hi"));
  ch.lift_off = num_array(require(j, "lift"));
  for (double v : ch.lift_off) ch.max_off = std::max(ch.max_off, std::fabs(v));
  return ch;
}

LatticePtr lattice_from_json(const json& j) {
  return std::make_shared<FrozenLattice>(integer(require(j, "k0")),
                                         num_array(require(j, "levels")));
}

}  // namespace

Fiber fiber_from_json(const json& j) {
  if (j == "point") return Fiber::Point;
  if (j == "circle") return Fiber::Circle;
  throw Error(Err::InvalidSpec, "fiber must be \"point\" or \"circle\"");
}

json fiber_to_json(Fiber f) { return (f == Fiber::Point) ? "point" : "circle"; }

MapPtr map_from_json(Fiber fiber, const json& j) {
  if (!j.is_object()) throw Error(Err::InvalidSpec, "map node must be an object");
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "identity") return identity(fiber);
  if (kind == "vertical_pl")
    return std::make_shared<VerticalPl>(fiber, Pl1d(pair_array(require(j, "breakpoints"))));
  if (kind == "twist") {
    const json& alpha = require(j, "alpha");
    const std::string akind = require(alpha, "kind").get<std::string>();
    if (akind == "constant")
      return std::make_shared<TwistMap>(fiber, num(require(alpha, "value")));
    if (akind == "pl")
      return std::make_shared<TwistMap>(fiber, pair_array(require(alpha, "breakpoints")));
    throw Error(Err::InvalidSpec, "twist alpha kind must be constant or pl");
  }
  if (kind == "fiber_bump") {
    const json& band = require(j, "band");
    if (!band.is_array() || band.size() != 2)
      throw Error(Err::InvalidSpec, "fiber_bump band must be [lo, hi]");
    std::vector<FiberBump::Track> tracks;
    for (const auto& tr : require(j, "tracks")) {
      FiberBump::Track t;
      t.t_in = num_array(require(tr, "in"));
      t.t_out = num_array(require(tr, "out"));
      tracks.push_back(std::move(t));
    }
    return std::make_shared<FiberBump>(fiber, num(band[0]), num(band[1]), std::move(tracks));
  }
  if (kind == "monotone_smooth")
    return std::make_shared<MonotoneSmooth>(fiber, pair_array(require(j, "knots")));
  if (kind == "compose") {
    std::vector<MapPtr> children;
    for (const auto& c : require(j, "children")) children.push_back(map_from_json(fiber, c));
    return compose_or_identity(fiber, std::move(children));
  }
  if (kind == "inverse") return invert(map_from_json(fiber, require(j, "child")));
  if (kind == "banded_product") {
    std::map<i64, BandedProduct::FrozenBand> bands;
    for (const auto& b : require(j, "bands")) {
      i64 k = integer(require(b, "k"));
      bands.emplace(k, BandedProduct::FrozenBand{num(require(b, "lo")), num(require(b, "hi")),
                                                 map_from_json(fiber, require(b, "map"))});
    }
    return std::make_shared<BandedProduct>(fiber, std::move(bands));
  }
  if (kind == "conjugator") {
    const json& sig = require(j, "sigma");
    const json& tau = require(j, "tau");
    std::vector<std::pair<double, double>> pins;
    if (j.contains("pins")) {
      for (const auto& pj : j.at("pins")) {
        if (!pj.is_array() || pj.size() != 2)
          throw Error(Err::InvalidSpec, "conjugator pin must be a pair");
        pins.push_back({num(pj[0]), num(pj[1])});
      }
    }
    return std::make_shared<ConjugatorMap>(
        fiber, map_from_json(fiber, require(sig, "map")), lattice_from_json(require(sig, "bands")),
        chart_from_json(require(sig, "chart")), map_from_json(fiber, require(tau, "map")),
        lattice_from_json(require(tau, "bands")), chart_from_json(require(tau, "chart")),
        std::move(pins));
  }
  throw Error(Err::InvalidSpec, "unknown map node kind '" + kind + "'");
}

SpecDocument spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(Err::InvalidSpec, "spec must be a JSON object");
  if (require(j, "schema") != kSchemaVersion)
    throw Error(Err::InvalidSpec, "unsupported schema version");
  SpecDocument spec;
  spec.fiber = fiber_from_json(require(j, "fiber"));
  spec.map = map_from_json(spec.fiber, require(j, "map"));
  if (j.contains("options")) {
    const json& o = j["options"];
    if (o.contains("tolerance")) spec.options.tolerance = num(o["tolerance"]);
    if (o.contains("window")) {
      auto w = num_array(o["window"]);
      if (w.size() != 2 || !(w[0] < w[1]))
        throw Error(Err::InvalidSpec, "window must be [lo, hi] with lo < hi");
      spec.options.window = Window{w[0], w[1]};
    }
    if (o.contains("grid")) {
      const json& g = o["grid"];
      if (!g.is_array() || g.size() != 2)
        throw Error(Err::InvalidSpec, "grid must be [theta_n, t_n]");
      spec.options.grid = Grid{static_cast<int>(integer(g[0])), static_cast<int>(integer(g[1]))};
    }
    if (o.contains("horizon")) spec.options.horizon = integer(o["horizon"]);
    if (o.contains("resolution"))
      spec.options.resolution = static_cast<int>(integer(o["resolution"]));
    if (o.contains("exponents"))
      for (const auto& p : o["exponents"]) spec.exponents.push_back(integer(p));
  }
  return spec;
}

json spec_to_json(const SpecDocument& spec) {
  json j = json::object();
  j["schema"] = kSchemaVersion;
  j["fiber"] = fiber_to_json(spec.fiber);
  j["map"] = map_to_json(*spec.map);
  json o = json::object();
  if (spec.options.tolerance) o["tolerance"] = *spec.options.tolerance;
  if (spec.options.window)
    o["window"] = json::array({spec.options.window->lo, spec.options.window->hi});
  if (spec.options.grid)
    o["grid"] = json::array({spec.options.grid->theta_n, spec.options.grid->t_n});
  if (spec.options.horizon != PipelineOptions{}.horizon) o["horizon"] = spec.options.horizon;
  if (spec.options.resolution != PipelineOptions{}.resolution)
    o["resolution"] = spec.options.resolution;
  if (!spec.exponents.empty()) o["exponents"] = spec.exponents;
  if (!o.empty()) j["options"] = std::move(o);
  return j;
}

json report_to_json(const VerificationReport& rep) {
  json j = json::object();
  j["window"] = json::array({rep.window.lo, rep.window.hi});
  j["grid"] = json::array({rep.grid.theta_n, rep.grid.t_n});
  j["tolerance"] = rep.tolerance;
  j["max_error"] = rep.max_error;
  j["pass"] = rep.pass;
  json fails = json::array();
  for (const auto& w : rep.failures) fails.push_back(json::array({w.theta, w.t, w.error}));
  j["failures"] = std::move(fails);
  j["min_progress"] = rep.min_progress;
  return j;
}

VerificationReport report_from_json(const json& j) {
  VerificationReport rep;
  auto w = num_array(require(j, "window"));
  if (w.size() != 2) throw Error(Err::InvalidSpec, "report window must be [lo, hi]");
  rep.window = {w[0], w[1]};
  const json& g = require(j, "grid");
  if (!g.is_array() || g.size() != 2) throw Error(Err::InvalidSpec, "report grid must be a pair");
  rep.grid = {static_cast<int>(integer(g[0])), static_cast<int>(integer(g[1]))};
  rep.tolerance = num(require(j, "tolerance"));
  rep.max_error = num(require(j, "max_error"));
  rep.pass = require(j, "pass").get<bool>();
  for (const auto& f : require(j, "failures")) {
    auto v = num_array(f);
    if (v.size() != 3) throw Error(Err::InvalidSpec, "failure entries are [theta, t, error]");
    rep.failures.push_back({v[0], v[1], v[2]});
  }
  if (j.contains("min_progress")) rep.min_progress = integer(j["min_progress"]);
  return rep;
}

json suited_to_json(const SuitedDecomposition& s) {
  json j = json::object();
  j["k_lo"] = s.band_lo();
  j["margin"] = s.margin();
  json m = json::array();
  for (i64 k = s.band_lo(); k <= s.band_hi() + 1; ++k) m.push_back(s.boundary(k));
  json t = json::array();
  for (i64 k = s.band_lo(); k <= s.band_hi(); ++k) t.push_back(s.marker(k));
  j["m"] = std::move(m);
  j["t"] = std::move(t);
  return j;
}

SuitedPtr suited_from_json(const json& j) {
  return std::make_shared<SuitedDecomposition>(integer(require(j, "k_lo")),
                                               num_array(require(j, "m")),
                                               num_array(require(j, "t")),
                                               num(require(j, "margin")));
}

json cert_to_json(const FactorizationCertificate& cert) {
  json j = json::object();
  j["schema"] = kSchemaVersion;
  j["kind"] = cert.terms.empty() ? "commutator" : "power_word";
  j["fiber"] = fiber_to_json(cert.fiber);
  j["input"] = map_to_json(*cert.input);
  if (cert.terms.empty()) {
    j["a"] = map_to_json(*cert.a);
    j["b"] = map_to_json(*cert.b);
  } else {
    json terms = json::array();
    for (const auto& term : cert.terms) {
      json t = json::object();
      t["exponent"] = term.exponent;
      t["map"] = map_to_json(*term.map);
      terms.push_back(std::move(t));
    }
    j["terms"] = std::move(terms);
  }
  if (cert.suited) j["suited"] = suited_to_json(*cert.suited);
  j["report"] = report_to_json(cert.report);
  return j;
}

FactorizationCertificate cert_from_json(const json& j) {
  if (!j.is_object()) throw Error(Err::InvalidSpec, "certificate must be a JSON object");
  if (require(j, "schema") != kSchemaVersion)
    throw Error(Err::InvalidSpec, "unsupported schema version");
  FactorizationCertificate cert;
  cert.fiber = fiber_from_json(require(j, "fiber"));
  cert.input = map_from_json(cert.fiber, require(j, "input"));
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "commutator") {
    cert.a = map_from_json(cert.fiber, require(j, "a"));
    cert.b = map_from_json(cert.fiber, require(j, "b"));
  } else if (kind == "power_word") {
    for (const auto& t : require(j, "terms"))
      cert.terms.push_back({map_from_json(cert.fiber, require(t, "map")),
                            integer(require(t, "exponent"))});
    if (cert.terms.size() < 2) throw Error(Err::InvalidSpec, "power word needs r > 1 terms");
  } else {
    throw Error(Err::InvalidSpec, "unknown certificate kind '" + kind + "'");
  }
  if (j.contains("suited")) cert.suited = suited_from_json(j["suited"]);
  cert.report = report_from_json(require(j, "report"));
  return cert;
}

std::string to_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace cw
