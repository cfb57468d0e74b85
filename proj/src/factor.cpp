#include "commwidth/factor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <tuple>

#include "commwidth/curve.hpp"

namespace cw {

PipelineOptions::Resolved PipelineOptions::resolve(Fiber f) const {
  Resolved r;
  if (f == Fiber::Point) {
    // The factorization pipelines straighten sampled curves, so their
    // certificates carry the sampled-curve default tolerance.
    r.tolerance = tolerance.value_or(1e-6);
    r.certify_tol = r.tolerance;
    r.window = window.value_or(Window{-50.0, 50.0});
    r.grid = grid.value_or(Grid{1, 10000});
  } else {
    r.tolerance = tolerance.value_or(1e-6);
    r.certify_tol = std::max(r.tolerance, 1e-2);
    r.window = window.value_or(Window{-20.0, 20.0});
    r.grid = grid.value_or(Grid{200, 200});
  }
  r.resolution = resolution;
  r.margin = margin;
  r.window_w = window_w;
  r.horizon = horizon;
  r.certify_iterations = certify_iterations;
  r.certify_samples = certify_samples;
  return r;
}

// ---------------------------------------------------------------------------
// BoundaryShift

double BoundaryShift::shift(double t, int dir) const {
  const BandLattice& L = *bands_;
  i64 k = locate_band_clamped(L, t);
  // Conceptually a PL map with breakpoints (L(j), L(j+dir)); beyond the
  // materializable range it continues with the terminal slope.
  auto lvl = [&](i64 j) { return L.level(j); };
  if (k < L.k_min()) k = L.k_min();
  if (k >= L.k_max()) k = L.k_max() - 1;
  i64 lo_needed = std::min({k, k + dir});
  i64 hi_needed = std::max({k + 1, k + 1 + dir});
  while (L.k_min() > lo_needed && L.try_materialize(L.k_min() - 1)) {}
  while (L.k_max() < hi_needed && L.try_materialize(L.k_max() + 1)) {}

  if (lo_needed >= L.k_min() && hi_needed <= L.k_max() && t >= lvl(k) && t <= lvl(k + 1)) {
    double a = lvl(k), b = lvl(k + 1);
    double a2 = lvl(k + dir), b2 = lvl(k + 1 + dir);
    if (t == a) return a2;  // exact at the lattice
    if (t == b) return b2;
    return a2 + (t - a) * ((b2 - a2) / (b - a));
  }

  // Terminal affine extension.
  i64 mn = L.k_min(), mx = L.k_max();
  if (mx - mn < 2) throw Error(Err::NotMaterialized, "lattice too small for a boundary shift");
  if (t >= lvl(mx - 1)) {
    double slope = (lvl(mx) - lvl(mx - 1)) / (lvl(mx - 1) - lvl(mx - 2));
    if (dir > 0) return lvl(mx) + slope * (t - lvl(mx - 1));
    // inverse above the top: undo the same extension
    double inv_slope = (lvl(mx - 1) - lvl(mx - 2)) / (lvl(mx) - lvl(mx - 1));
    return lvl(mx - 1) + inv_slope * (t - lvl(mx));
  }
  double slope = (lvl(mn + 1) - lvl(mn)) / (lvl(mn + 2) - lvl(mn + 1));
  if (dir > 0) {
    double fwd_slope = (lvl(mn + 2) - lvl(mn + 1)) / (lvl(mn + 1) - lvl(mn));
    return lvl(mn + 1) + fwd_slope * (t - lvl(mn));
  }
  return lvl(mn) + slope * (t - lvl(mn + 1));
}

void BoundaryShift::to_json(json& out) const {
  out["kind"] = "vertical_pl";
  json bps = json::array();
  const BandLattice& L = *bands_;
  for (i64 k = L.k_min(); k < L.k_max(); ++k)
    bps.push_back(json::array({L.level(k), L.level(k + 1)}));
  out["breakpoints"] = std::move(bps);
}

MapPtr build_vertical_shift(SuitedPtr suited) {
  return std::make_shared<BoundaryShift>(suited->map() ? suited->map()->fiber() : Fiber::Point,
                                         suited->boundaries());
}

// ---------------------------------------------------------------------------
// Straightener

MapPtr build_straightener(const GraphCurve& curve, double lo, double hi, double target) {
  if (!(target > lo) || !(target < hi))
    throw Error(Err::BandViolation, "straightening target leaves the open band");
  if (!(curve.vmin > lo) || !(curve.vmax < hi))
    throw Error(Err::BandViolation, "curve leaves the open band");
  FiberBump::Track track;
  track.t_in = curve.values;
  track.t_out.assign(curve.values.size(), target);
  return std::make_shared<FiberBump>(curve.fiber, lo, hi,
                                     std::vector<FiberBump::Track>{std::move(track)});
}

namespace {

// Line-fiber straightener whose in-band displacement profile D(x) = B(x) - x
// gives the straightened dynamics and the marker dynamics the same fixed
// structure: both band ends attracting with formula-matched germs and one
// interior repelling crossing carried by a single ascent segment shared by
// the level sets D = 0 and D = delta.  Mismatched structure would make the
// conjugator between the two dynamics degenerate exponentially in the band
// count.
MapPtr build_straightener_matched(double lo, double hi, double gamma_abs, double target, double sL,
                                  double sR, double e_b, double e_t) {
  if (!(target > lo) || !(target < hi))
    throw Error(Err::BandViolation, "straightening target leaves the open band");
  if (!(gamma_abs > lo) || !(gamma_abs < hi))
    throw Error(Err::BandViolation, "curve leaves the open band");
  const double w = hi - lo;
  const double gma = gamma_abs - lo;
  const double mu = target - lo;
  const double delta = mu - gma;

  auto simple = [&]() {
    GraphCurve c = GraphCurve::constant(Fiber::Point, gamma_abs, 1);
    return build_straightener(c, lo, hi, target);
  };
  if (std::fabs(delta) < 1e-3) return simple();

  const double room_lo = gma;
  const double room_hi = w - gma;
  std::vector<double> xs, ys;
  auto push = [&](double x, double y) {
    xs.push_back(x);
    ys.push_back(y);
  };

  // Ascent through the levels 0 and delta of the displacement profile.  The
  // slope at each crossing is the repelling multiplier of the corresponding
  // dynamics, and the conjugator's chained evaluation amplifies roundoff by
  // the product of these multipliers across the window.  The ascent is
  // therefore gentle (slope u0) in a window of half-height hh around each
  // crossing and steep elsewhere, fitted to the x-budget ahead of it.
  // Returns false when the budget cannot carry the shape.
  const double u0 = 1.35;
  auto ascend = [&](double x, double D, double len, double hh,
                    std::initializer_list<double> levels) {
    double gentle = 0.0, steep = 0.0, at = D;
    bool odd = false;
    for (double lvl : levels) {
      (odd ? gentle : steep) += std::max(0.0, lvl - at);
      at = std::max(at, lvl);
      odd = !odd;
    }
    double gentle_len = gentle / (u0 - 1.0);
    if (!(hh > 1e-5) || !(steep > 0.0) || !(gentle_len < 0.7 * len)) return false;
    double big = 1.0 + steep / (len - gentle_len);
    odd = false;
    for (double lvl : levels) {
      if (lvl > D) {
        x += (lvl - D) / ((odd ? u0 : big) - 1.0);
        D = lvl;
        push(x, x + D);
      }
      odd = !odd;
    }
    return true;
  };

  if (delta < 0.0) {
    // Curve above the marker.  D descends from the lower edge, crosses the
    // level delta exactly at the curve, dips below, then one ascent crosses
    // delta and 0 before a positive excursion returning to the upper edge.
    double ad = -delta;
    double d_c = std::min({0.3, 0.25 * room_lo, 0.45 * ad / (1.0 - sL)});
    double x1 = std::min({0.3, 0.3 * (gma - d_c), 0.45 * ad / (1.0 - e_b)});
    double d_cp = std::min(0.3, 0.05 * room_hi);
    double z6 = std::min(0.3, 0.05 * room_hi);
    double x5 = w - 2.0 * z6;
    double len = x5 - (gma + d_cp);
    if (!(x1 > 1e-4) || !(len > 0.02)) return simple();
    push(x1, e_b * x1);
    push(gma - d_c, mu - sL * d_c);
    push(gma, mu);
    push(gma + d_cp, mu + sR * d_cp);
    double hh = std::min(0.2 * ad, 0.04 * len);
    if (!ascend(gma + d_cp, delta - (1.0 - sR) * d_cp, len, hh,
                {delta - hh, delta + hh, -hh, hh}))
      push(x5, x5 + std::min(0.05, 0.01 * room_hi));
    push(w - z6, w - e_t * z6);
  } else {
    // Curve below the marker: mirrored profile with the ascent before the
    // curve cluster and the dip at the lower edge.
    double x1 = std::min(0.3, 0.1 * room_lo);
    double d_c = std::min(0.3, 0.05 * room_lo);
    double d5 = std::min(0.3, 0.05 * room_lo);
    double x2p = gma - d_c - d5;
    double d_cp = std::min({0.3, 0.2 * room_hi, 0.45 * delta / (1.0 - sR)});
    double z6 = std::min({0.3, 0.2 * room_hi, 0.45 * delta / (1.0 - e_t)});
    double len = x2p - x1;
    if (!(len > 0.02) || !(gma + d_cp < w - z6 - 0.02)) return simple();
    push(x1, e_b * x1);
    double hh = std::min(0.2 * delta, 0.04 * len);
    if (!ascend(x1, (e_b - 1.0) * x1, len, hh, {-hh, hh, delta - hh, delta + hh}))
      push(x2p, x2p + delta + std::min(0.05, 0.01 * room_lo));
    push(gma - d_c, mu - sL * d_c);
    push(gma, mu);
    push(gma + d_cp, mu + sR * d_cp);
    push(w - z6, w - e_t * z6);
  }

  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(xs[i] < w) || !(ys[i] > 0.0) || !(ys[i] < w)) return simple();
    if (i > 0 && (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1]))) return simple();
  }
  // In absolute coordinates adjacent nodes can collide to the same double
  // when |lo| is large; drop such nodes, the profile change is below ulp.
  std::vector<FiberBump::Track> tracks;
  tracks.reserve(xs.size());
  double prev_in = lo, prev_out = lo;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double ti = lo + xs[i], to = lo + ys[i];
    if (!(ti > prev_in) || !(ti < hi) || !(to > prev_out) || !(to < hi)) continue;
    FiberBump::Track tr;
    tr.t_in.assign(1, ti);
    tr.t_out.assign(1, to);
    tracks.push_back(std::move(tr));
    prev_in = ti;
    prev_out = to;
  }
  if (tracks.empty()) return simple();
  return std::make_shared<FiberBump>(Fiber::Point, lo, hi, std::move(tracks));
}

}  // namespace

// ---------------------------------------------------------------------------
// BandedProduct

BandedProduct::BandedProduct(SuitedPtr suited, MapPtr f, MapPtr gprime, CurveOptions curve)
    : Map(f->fiber()),
      suited_(std::move(suited)),
      f_(std::move(f)),
      gprime_(std::move(gprime)),
      curve_(curve) {}

BandedProduct::BandedProduct(Fiber fiber, std::map<i64, FrozenBand> bands)
    : Map(fiber), bands_(std::move(bands)) {}

const LevelProbe& BandedProduct::marker_probe(i64 j) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = probes_.find(j);
    if (it != probes_.end()) return it->second;
  }
  MapPtr gpf = compose({gprime_, f_});
  LevelProbe probe = level_probe(*gpf, suited_->marker(j), 1e-6, curve_);
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = probes_.emplace(j, std::move(probe));
  return it->second;
}

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

// Slope of the straightener of band k at its upper edge, chosen so the
// straightened dynamics contracts by 0.7 per band at the boundary orbit.  The
// rule depends only on adjacent band widths, so the band below the edge and
// the band above it derive the same value independently.  Germs near 1 would
// stall the certified orbit progress; germs near 0 make the conjugator's
// reversed chains collapse below double resolution.
double BandedProduct::edge_top(i64 k) const {
  if (!suited_->try_ensure_band(k) || !suited_->try_ensure_band(k - 1)) return 0.7;
  double w_k = suited_->boundary(k + 1) - suited_->boundary(k);
  double w_km1 = suited_->boundary(k) - suited_->boundary(k - 1);
  return clamp(0.7 * w_km1 / w_k, 0.05, 0.95);
}

MapPtr BandedProduct::band_factor(i64 k) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = bands_.find(k);
    if (it != bands_.end()) return it->second.map;
  }
  if (!suited_) return nullptr;
  // The straightener of band k carries g'(f(Sigma_{k-1})) to the marker t_k.
  if (!suited_->try_ensure_band(k) || !suited_->try_ensure_band(k - 1)) return nullptr;
  double lo = suited_->boundary(k);
  double hi = suited_->boundary(k + 1);
  double target = suited_->marker(k);

  MapPtr bump;
  if (fiber() == Fiber::Circle) {
    MapPtr gpf = compose({gprime_, f_});
    GraphCurve curve = level_image(*gpf, suited_->marker(k - 1), curve_);
    bump = build_straightener(curve, lo, hi, target);
  } else {
    const LevelProbe& probe = marker_probe(k - 1);
    double gamma_abs = probe.curve.values[0];
    // One-sided germs at the curve copy the straightened dynamics' germs at
    // the boundary below this band: sL continues the previous band's upper
    // edge, sR continues this band's own lower edge, both scaled by the
    // local width ratio over the difference quotient of g' o f.
    double w_k = hi - lo;
    double w_km1 = lo - suited_->boundary(k - 1);
    double a_hi = w_k / w_km1;
    double q_hi = probe.q_hi[0];
    double q_lo = probe.q_lo[0];
    double e_b = clamp(0.7 / a_hi, 0.05, 0.95);
    double sR = 0.5, sL = 0.5, e_t = 0.5;
    if (std::isfinite(q_hi) && q_hi > 0.0) sR = clamp(a_hi * e_b / q_hi, 0.05, 0.95);
    if (std::isfinite(q_lo) && q_lo > 0.0 && suited_->try_ensure_band(k - 2)) {
      double w_km2 = suited_->boundary(k - 1) - suited_->boundary(k - 2);
      sL = clamp((w_km1 / w_km2) * edge_top(k - 1) / q_lo, 0.05, 0.95);
    }
    e_t = edge_top(k);
    bump = build_straightener_matched(lo, hi, gamma_abs, target, sL, sR, e_b, e_t);
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = bands_.emplace(k, FrozenBand{lo, hi, bump});
  return it->second.map;
}

Pt BandedProduct::apply(Pt p, bool inverse) const {
  i64 k;
  if (suited_) {
    try {
      k = locate_band(*suited_->boundaries(), p.t);
    } catch (const Error& e) {
      if (e.code() != Err::NotMaterialized) throw;
      return p;  // identity beyond the materializable bands
    }
  } else {
    std::lock_guard<std::mutex> lock(mu_);
    k = bands_.begin()->first - 1;
    for (const auto& [idx, b] : bands_) {
      if (p.t >= b.lo && p.t < b.hi) {
        k = idx;
        break;
      }
    }
    if (!bands_.count(k)) return p;
  }
  MapPtr bump = band_factor(k);
  if (!bump) return p;
  return inverse ? bump->backward(p) : bump->forward(p);
}

void BandedProduct::to_json(json& out) const {
  out["kind"] = "banded_product";
  if (suited_) {
    // materialize straighteners over a snapshot of the band range; building
    // near the frontier can extend it
    const i64 lo = suited_->band_lo() + 1, hi = suited_->band_hi();
    for (i64 k = lo; k <= hi; ++k) band_factor(k);
  }
  json bands = json::array();
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [k, b] : bands_) {
    json jb = json::object();
    jb["k"] = k;
    jb["lo"] = b.lo;
    jb["hi"] = b.hi;
    jb["map"] = map_to_json(*b.map);
    bands.push_back(std::move(jb));
  }
  out["bands"] = std::move(bands);
}

// ---------------------------------------------------------------------------
// Conjugator

namespace {

BandChart make_chart(const Map& m, const BandLattice& bands, int resolution) {
  BandChart ch;
  bands.try_materialize(0);
  bands.try_materialize(1);
  ch.lo = bands.level(0);
  ch.hi = bands.level(1);
  if (m.fiber() == Fiber::Circle) {
    ch.lift_off = boundary_lift(m, ch.lo, resolution);
    for (double v : ch.lift_off) ch.max_off = std::max(ch.max_off, std::fabs(v));
    // drop an identity lift to keep evaluation exact where theta is untouched
    if (ch.max_off == 0.0) ch.lift_off.clear();
  }
  return ch;
}

}  // namespace

ConjugatorMap::ConjugatorMap(Fiber fiber, MapPtr sigma, LatticePtr sigma_bands,
                             BandChart sigma_chart, MapPtr tau, LatticePtr tau_bands,
                             BandChart tau_chart,
                             std::vector<std::pair<double, double>> pins)
    : Map(fiber),
      sigma_(std::move(sigma)),
      tau_(std::move(tau)),
      sigma_bands_(std::move(sigma_bands)),
      tau_bands_(std::move(tau_bands)),
      sigma_chart_(std::move(sigma_chart)),
      tau_chart_(std::move(tau_chart)),
      pins_(std::move(pins)) {
  for (std::size_t i = 0; i < pins_.size(); ++i) {
    bool interior = pins_[i].first > 0.0 && pins_[i].first < 1.0 && pins_[i].second > 0.0 &&
                    pins_[i].second < 1.0;
    bool ordered = i == 0 || (pins_[i].first > pins_[i - 1].first &&
                              pins_[i].second > pins_[i - 1].second);
    if (!interior || !ordered)
      throw Error(Err::InvalidSpec, "conjugator pins must be interior and increasing");
  }
}

double ConjugatorMap::pin_map(double s, bool inverse) const {
  if (pins_.empty()) return s;
  auto key = [&](const std::pair<double, double>& p) { return inverse ? p.second : p.first; };
  auto val = [&](const std::pair<double, double>& p) { return inverse ? p.first : p.second; };
  std::size_t lo = 0, hi = pins_.size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (key(pins_[mid]) < s)
      lo = mid + 1;
    else
      hi = mid;
  }
  double a0 = (lo == 0) ? 0.0 : key(pins_[lo - 1]);
  double b0 = (lo == 0) ? 0.0 : val(pins_[lo - 1]);
  double a1 = (lo == pins_.size()) ? 1.0 : key(pins_[lo]);
  double b1 = (lo == pins_.size()) ? 1.0 : val(pins_[lo]);
  return b0 + (s - a0) * ((b1 - b0) / (a1 - a0));
}

Pt ConjugatorMap::chart_fwd(const BandChart& ch, double x, double s) const {
  double t = ch.lo + s * (ch.hi - ch.lo);
  if (fiber() == Fiber::Point) return {0.0, t};
  double lifted = (1.0 - s) * x + s * ch.lift(x);
  return {wrap_turn(lifted), t};
}

std::pair<double, double> ConjugatorMap::chart_inv(const BandChart& ch, Pt p) const {
  double s = (p.t - ch.lo) / (ch.hi - ch.lo);
  if (fiber() == Fiber::Point) return {0.0, s};
  if (ch.lift_off.empty()) return {wrap_turn(p.theta), s};
  // solve (1-s) x + s Theta~(x) = theta for x by monotone bisection
  double theta = wrap_turn(p.theta);
  double pad = ch.max_off + 1.0;
  double lo = theta - pad, hi = theta + pad;
  auto F = [&](double x) { return (1.0 - s) * x + s * ch.lift(x); };
  while (F(lo) > theta) lo -= 1.0;
  while (F(hi) < theta) hi += 1.0;
  for (int i = 0; i < 80 && hi - lo > bisect_tol_; ++i) {
    double mid = 0.5 * (lo + hi);
    if (F(mid) < theta)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), s};
}

double ConjugatorMap::lift_exact(const Map& m, const BandChart& ch, double x) const {
  // Exact lifted boundary angle map: the sampled chart lift selects the
  // branch, the map evaluation supplies the exact value on it.
  double ref = ch.lift(x);
  double a = m.forward({wrap_turn(x), ch.lo}).theta;
  double d = a - ref;
  d -= std::round(d);
  return ref + d;
}

Pt ConjugatorMap::dom_chart_fwd(const Map& m, const BandChart& ch, double x, double s) const {
  // Chart of the fundamental domain bounded below by the flat base circle
  // and above by its true image curve under m, ruled vertically between the
  // two: s = 1 lands exactly on the curve as m evaluates it.
  Pt top = m.forward({wrap_turn(x), ch.lo});
  double theta = (1.0 - s) * x + s * lift_exact(m, ch, x);
  double t = (1.0 - s) * ch.lo + s * top.t;
  return {wrap_turn(theta), t};
}

std::pair<double, double> ConjugatorMap::dom_chart_inv(const Map& m, const BandChart& ch,
                                                       Pt q) const {
  double theta = wrap_turn(q.theta);
  auto F = [&](double x) {
    Pt top = m.forward({wrap_turn(x), ch.lo});
    double ref = ch.lift(x);
    double d = top.theta - ref;
    d -= std::round(d);
    double s = (q.t - ch.lo) / (top.t - ch.lo);
    return (1.0 - s) * x + s * (ref + d) - theta;
  };
  double pad = ch.max_off + 1.0;
  double lo = theta - pad, hi = theta + pad;
  while (F(lo) > 0.0) lo -= 1.0;
  while (F(hi) < 0.0) hi += 1.0;
  for (int i = 0; i < 100 && hi - lo > bisect_tol_; ++i) {
    double mid = 0.5 * (lo + hi);
    if (F(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double x = 0.5 * (lo + hi);
  double L = m.forward({wrap_turn(x), ch.lo}).t;
  return {x, (q.t - ch.lo) / (L - ch.lo)};
}

i64 ConjugatorMap::locate_domain(const Map& m, double base, Pt& q) const {
  // Index n with m^{-n}(q) in the fundamental domain [base circle, its true
  // m-image): flat level comparisons only, so n(m(p)) = n(p) + 1 holds
  // structurally and the conjugation identity is exact across domains.
  const int guard = 100000;
  i64 n = 0;
  if (q.t >= base) {
    for (int i = 0; i < guard; ++i) {
      Pt r = m.backward(q);
      if (!std::isfinite(r.t)) throw Error(Err::NonFinite, "conjugator orbit left the range");
      if (r.t < base) return n;
      q = r;
      ++n;
    }
  } else {
    for (int i = 0; i < guard; ++i) {
      q = m.forward(q);
      if (!std::isfinite(q.t)) throw Error(Err::NonFinite, "conjugator orbit left the range");
      --n;
      if (q.t >= base) return n;
    }
  }
  throw Error(Err::NotLoxodromic, "conjugator orbit fails to cross the fundamental domain");
}

Pt ConjugatorMap::forward(Pt p) const {
  if (fiber() == Fiber::Circle) {
    Pt q = p;
    i64 n = locate_domain(*sigma_, sigma_chart_.lo, q);
    auto [x, s] = dom_chart_inv(*sigma_, sigma_chart_, q);
    Pt v = dom_chart_fwd(*tau_, tau_chart_, x, pin_map(s, false));
    return apply_iterate(*tau_, v, n);
  }
  i64 n = locate_band(*sigma_bands_, p.t);
  Pt q = apply_iterate(*sigma_, p, -n);
  auto [x, s] = chart_inv(sigma_chart_, q);
  Pt v = chart_fwd(tau_chart_, x, pin_map(s, false));
  return apply_iterate(*tau_, v, n);
}

Pt ConjugatorMap::backward(Pt p) const {
  if (fiber() == Fiber::Circle) {
    Pt q = p;
    i64 n = locate_domain(*tau_, tau_chart_.lo, q);
    auto [x, s] = dom_chart_inv(*tau_, tau_chart_, q);
    Pt v = dom_chart_fwd(*sigma_, sigma_chart_, x, pin_map(s, true));
    return apply_iterate(*sigma_, v, n);
  }
  i64 n = locate_band(*tau_bands_, p.t);
  Pt q = apply_iterate(*tau_, p, -n);
  auto [x, s] = chart_inv(tau_chart_, q);
  Pt v = chart_fwd(sigma_chart_, x, pin_map(s, true));
  return apply_iterate(*sigma_, v, n);
}

namespace {

json lattice_to_json(const BandLattice& L) {
  json j = json::object();
  j["k0"] = L.k_min();
  json lv = json::array();
  for (i64 k = L.k_min(); k <= L.k_max(); ++k) lv.push_back(L.level(k));
  j["levels"] = std::move(lv);
  return j;
}

json chart_to_json(const BandChart& ch) {
  json j = json::object();
  j["lo"] = ch.lo;
  j["hi"] = ch.hi;
  j["lift"] = ch.lift_off;
  return j;
}

}  // namespace

void ConjugatorMap::to_json(json& out) const {
  out["kind"] = "conjugator";
  json sig = json::object();
  sig["map"] = map_to_json(*sigma_);
  sig["bands"] = lattice_to_json(*sigma_bands_);
  sig["chart"] = chart_to_json(sigma_chart_);
  out["sigma"] = std::move(sig);
  json tau = json::object();
  tau["map"] = map_to_json(*tau_);
  tau["bands"] = lattice_to_json(*tau_bands_);
  tau["chart"] = chart_to_json(tau_chart_);
  out["tau"] = std::move(tau);
  json pins = json::array();
  for (const auto& [a, b] : pins_) pins.push_back(json::array({a, b}));
  out["pins"] = std::move(pins);
}

// Conjugator with an explicit alignment choice.  dir = +1 aligns the
// fundamental-band identification with the dynamics toward the sink, dir = -1
// toward the source, dir = 0 leaves the identification affine.  depth is the
// band at which the alignment is read off: push a fundamental-band point
// there, transfer affinely, pull back with the other map.  Deeper alignments
// capture more of the asymptotic local scales but accumulate more sampling
// noise, and the two directions genuinely disagree when the per-band
// distortion is large, so no single choice conditions every input; callers
// probe a small ladder of variants and keep the best verified one.
static MapPtr conjugator_aligned(const LoxodromicCertificate& sigma,
                                 const LoxodromicCertificate& tau, int resolution, int dir,
                                 i64 depth) {
  if (sigma.map->fiber() != tau.map->fiber())
    throw Error(Err::FiberMismatch, "conjugator over mixed fibers");
  if (sigma.sink != tau.sink)
    throw Error(Err::EndsMismatch, "conjugator requires a shared sink orientation");
  // Normalize so both maps carry band k to band k+1; the conjugator of the
  // inverses conjugates the originals as well.
  MapPtr ms = (sigma.sink > 0) ? sigma.map : invert(sigma.map);
  MapPtr mt = (tau.sink > 0) ? tau.map : invert(tau.map);
  BandChart cs = make_chart(*ms, *sigma.bands, resolution);
  BandChart ct = make_chart(*mt, *tau.bands, resolution);

  std::vector<std::pair<double, double>> pins;
  if (sigma.map->fiber() == Fiber::Point && dir != 0 && depth > 0) {
    const BandLattice& Ls = *sigma.bands;
    const BandLattice& Lt = *tau.bands;
    auto deepest = [](const BandLattice& L, int dir) {
      i64 n = std::min<i64>(dir > 0 ? L.k_max() - 1 : -L.k_min() - 1, 12);
      while (n < 12 && L.try_materialize(dir * (n + 2))) ++n;
      return n;
    };
    auto phi_fwd = [&](i64 N, double a) {
      Pt p{0.0, Ls.level(0) + a * (Ls.level(1) - Ls.level(0))};
      p = apply_iterate(*ms, p, N);
      double s = (p.t - Ls.level(N)) / (Ls.level(N + 1) - Ls.level(N));
      Pt q{0.0, Lt.level(N) + s * (Lt.level(N + 1) - Lt.level(N))};
      q = apply_iterate(*mt, q, -N);
      return (q.t - Lt.level(0)) / (Lt.level(1) - Lt.level(0));
    };
    auto phi_par = [&](i64 N, double u) {
      Pt p{0.0, Ls.level(N) + u * (Ls.level(N + 1) - Ls.level(N))};
      p = apply_iterate(*ms, p, -N);
      Pt q{0.0, Lt.level(N) + u * (Lt.level(N + 1) - Lt.level(N))};
      q = apply_iterate(*mt, q, -N);
      return std::pair<double, double>{(p.t - Ls.level(0)) / (Ls.level(1) - Ls.level(0)),
                                       (q.t - Lt.level(0)) / (Lt.level(1) - Lt.level(0))};
    };
    auto sample = [&](i64 N, std::vector<std::pair<double, double>>& out) {
      // Graph of the alignment, traced from both sides: the forward trace
      // resolves it where it runs flat, the parametric deep-band trace where
      // it runs steep.  Both traces lie on the same increasing graph.
      const int coarse = 64;
      const double eps = 1e-9;
      auto trace = [&](auto&& eval_node) {
        std::function<void(double, std::pair<double, double>, double, std::pair<double, double>,
                           int)>
            refine = [&](double u0, std::pair<double, double> n0, double u1,
                         std::pair<double, double> n1, int d) {
              if (out.size() > 60000) return;
              double um = 0.5 * (u0 + u1);
              if (!(um > u0) || !(um < u1)) return;
              std::pair<double, double> nm = eval_node(um);
              bool flat = std::fabs(nm.first - 0.5 * (n0.first + n1.first)) <= 1e-13 &&
                          std::fabs(nm.second - 0.5 * (n0.second + n1.second)) <= 1e-13;
              if (!flat && d < 44) refine(u0, n0, um, nm, d + 1);
              out.push_back(nm);
              if (!flat && d < 44) refine(um, nm, u1, n1, d + 1);
            };
        double u_prev = eps;
        std::pair<double, double> n_prev = eval_node(u_prev);
        out.push_back(n_prev);
        for (int i = 1; i <= coarse; ++i) {
          double u = (i == coarse) ? 1.0 - eps
                                   : eps + (1.0 - 2.0 * eps) * static_cast<double>(i) / coarse;
          std::pair<double, double> node = eval_node(u);
          refine(u_prev, n_prev, u, node, 0);
          out.push_back(node);
          u_prev = u;
          n_prev = node;
        }
      };
      trace([&](double a) { return std::pair<double, double>{a, phi_fwd(N, a)}; });
      trace([&](double u) { return phi_par(N, u); });
    };
    try {
      // Extension stops quietly where a lattice does; neutral dynamics align
      // to the identity.
      i64 reach = std::min(deepest(Ls, dir), deepest(Lt, dir));
      std::vector<std::pair<double, double>> raw;
      if (reach >= 1) sample(dir * std::min<i64>(reach, depth), raw);
      std::sort(raw.begin(), raw.end());
      // Cap segment slopes: an alignment can carry near-discontinuities whose
      // faithful piecewise linear image would absorb a whole coordinate range
      // into one ulp and destroy the invertibility of the evaluation.  The
      // scales that matter for conditioning are orders of magnitude gentler,
      // so pins that would create segments steeper than the cap are dropped.
      const double cap = 1e6;
      for (const auto& pr : raw) {
        bool interior = pr.first > 0.0 && pr.first < 1.0 && pr.second > 0.0 && pr.second < 1.0;
        if (!interior) continue;
        if (!pins.empty()) {
          double da = pr.first - pins.back().first;
          double db = pr.second - pins.back().second;
          if (!(da > 0.0) || !(db > 0.0)) continue;
          if (db > cap * da || da > cap * db) continue;
        }
        pins.push_back(pr);
      }
    } catch (const Error&) {
      pins.clear();
    }
  }
  return std::make_shared<ConjugatorMap>(sigma.map->fiber(), ms, sigma.bands, std::move(cs), mt,
                                         tau.bands, std::move(ct), std::move(pins));
}

MapPtr conjugator(const LoxodromicCertificate& sigma, const LoxodromicCertificate& tau,
                  int resolution) {
  return conjugator_aligned(sigma, tau, resolution, +1, 2);
}

// ---------------------------------------------------------------------------
// Assembly and factorizations

AssembledPair assemble_g(MapPtr f, SuitedPtr suited, const PipelineOptions::Resolved& opt) {
  AssembledPair out;
  out.suited = suited;
  MapPtr gprime = build_vertical_shift(suited);
  CurveOptions copt;
  copt.resolution = opt.resolution;
  auto h = std::make_shared<BandedProduct>(suited, f, gprime, copt);
  out.g = compose({h, gprime});
  out.cert_g = certify_loxodromic(out.g, suited->boundaries(), opt.certify_iterations,
                                  opt.certify_samples, opt.certify_tol);
  MapPtr gf = compose({out.g, f});
  out.cert_gf = certify_loxodromic(gf, suited->markers(), opt.certify_iterations,
                                   opt.certify_samples, opt.certify_tol);
  return out;
}

MapPtr claim_word(const FactorizationCertificate& cert) {
  if (cert.terms.empty()) {
    if (!cert.a || !cert.b) throw Error(Err::InvalidSpec, "certificate carries no factors");
    return compose({cert.a, cert.b, invert(cert.a), invert(cert.b)});
  }
  std::vector<MapPtr> parts;
  for (const auto& term : cert.terms) parts.push_back(map_power(term.map, term.exponent));
  return compose(std::move(parts));
}

MapPtr map_power(MapPtr m, i64 n) {
  if (n == 0) return identity(m->fiber());
  MapPtr base = (n > 0) ? m : invert(m);
  i64 cnt = std::llabs(n);
  std::vector<MapPtr> copies(static_cast<std::size_t>(cnt), base);
  return compose_or_identity(m->fiber(), std::move(copies));
}

namespace {

SuitedPtr build_suited_for(MapPtr f, const PipelineOptions::Resolved& opt) {
  SuitedDecomposition::Config cfg;
  cfg.margin = opt.margin;
  cfg.window_w = opt.window_w;
  cfg.curve.resolution = opt.resolution;
  SuitedPtr suited = build_suited(f, 0, std::max<i64>(1, opt.horizon), cfg);
  suited->ensure_window(opt.window, 2);
  return suited;
}

void require_orientation(const Map& f, Window w) {
  OrientationReport rep = check_orientation(f, w);
  if (!rep.pass)
    throw Error(Err::InvalidSpec, "input is not an end-fixing orientation-preserving map: " +
                                      rep.detail);
}

}  // namespace

CommutatorResult commutator_factorization(MapPtr f, const PipelineOptions& opt) {
  const Fiber fiber = f->fiber();
  auto ro = opt.resolve(fiber);
  CommutatorResult res;
  res.cert.fiber = fiber;
  res.cert.input = f;

  if (is_identity(f)) {
    res.cert.a = identity(fiber);
    res.cert.b = identity(fiber);
    res.cert.report = verify_identity(
        *f, *compose({res.cert.a, res.cert.b, invert(res.cert.a), invert(res.cert.b)}), ro.window,
        ro.grid, ro.tolerance);
    return res;
  }

  require_orientation(*f, ro.window);
  SuitedPtr suited = build_suited_for(f, ro);
  AssembledPair asm_pair = assemble_g(f, suited, ro);

  // The conjugation identity is exact for every alignment variant; what
  // varies is how much roundoff the chained evaluation of the commutator
  // word re-amplifies.  Probe a short ladder of alignments against the input
  // on a coarse grid and keep the most accurate; the certificate is then
  // verified on the full grid as usual.
  MapPtr c;
  if (fiber == Fiber::Point) {
    struct Variant {
      int dir;
      i64 depth;
    };
    static constexpr Variant kLadder[] = {{+1, 2}, {-1, 2}, {+1, 1}, {-1, 1},
                                          {0, 0},  {-1, 3}, {+1, 4}, {-1, 5}};
    MapPtr ginv = invert(asm_pair.g);
    const int n_probe = 2048;
    std::vector<double> ft(n_probe + 1);
    for (int i = 0; i <= n_probe; ++i) {
      double t = ro.window.lo + (ro.window.hi - ro.window.lo) * i / n_probe;
      ft[static_cast<std::size_t>(i)] = eval(*f, {0.0, t}).t;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Variant& v : kLadder) {
      MapPtr cand = conjugator_aligned(asm_pair.cert_g, asm_pair.cert_gf, ro.resolution, v.dir,
                                       v.depth);
      MapPtr word = compose({ginv, cand, asm_pair.g, invert(cand)});
      double worst = 0.0;
      for (int i = 0; i <= n_probe; ++i) {
        double t = ro.window.lo + (ro.window.hi - ro.window.lo) * i / n_probe;
        worst = std::max(worst,
                         std::fabs(eval(*word, {0.0, t}).t - ft[static_cast<std::size_t>(i)]));
        if (worst >= best) break;
      }
      if (worst < best) {
        best = worst;
        c = cand;
      }
      if (best < 0.25 * ro.tolerance) break;
    }
  } else {
    c = conjugator(asm_pair.cert_g, asm_pair.cert_gf, ro.resolution);
  }

  res.g = asm_pair.g;
  res.c = c;
  res.cert_g = asm_pair.cert_g;
  res.cert_gf = asm_pair.cert_gf;
  res.suited = suited;
  res.cert.suited = suited;
  res.cert.a = invert(asm_pair.g);
  res.cert.b = c;
  MapPtr word = compose({res.cert.a, res.cert.b, invert(res.cert.a), invert(res.cert.b)});
  res.cert.report = verify_identity(*f, *word, ro.window, ro.grid, ro.tolerance);
  return res;
}

std::pair<LoxodromicCertificate, LoxodromicCertificate> split_loxodromic(
    MapPtr f, const PipelineOptions& opt) {
  auto ro = opt.resolve(f->fiber());
  require_orientation(*f, ro.window);
  SuitedPtr suited = build_suited_for(f, ro);
  AssembledPair asm_pair = assemble_g(f, suited, ro);
  LoxodromicCertificate first = certify_loxodromic(
      invert(asm_pair.g), suited->boundaries(), ro.certify_iterations, ro.certify_samples,
      ro.certify_tol);
  return {std::move(first), asm_pair.cert_gf};
}

MapPtr power_root_conjugate(const LoxodromicCertificate& fi, i64 p, int resolution) {
  if (p < 1) throw Error(Err::InvalidSpec, "power root needs a positive exponent");
  if (p == 1) return fi.map;
  LoxodromicCertificate power;
  power.map = map_power(fi.map, p);
  power.bands = std::make_shared<StridedLattice>(fi.bands, p);
  power.bands->try_materialize(-1);
  power.bands->try_materialize(2);
  power.sink = fi.sink;
  MapPtr h = conjugator(power, fi, resolution);
  return compose({h, fi.map, invert(h)});
}

FactorizationCertificate power_word_decomposition(MapPtr g, const std::vector<i64>& exponents,
                                                  const PipelineOptions& opt) {
  if (exponents.size() < 2) throw Error(Err::InvalidSpec, "power word needs r > 1 exponents");
  for (i64 p : exponents)
    if (p == 0) throw Error(Err::InvalidSpec, "power word exponents must be nonzero");
  const Fiber fiber = g->fiber();
  auto ro = opt.resolve(fiber);

  // Repeated loxodromic splitting of the leading factor: g = f_1 o ... o f_r.
  std::vector<LoxodromicCertificate> factors;
  {
    auto [f1, f2] = split_loxodromic(g, opt);
    factors.push_back(std::move(f1));
    factors.push_back(std::move(f2));
  }
  while (factors.size() < exponents.size()) {
    auto [f1, f2] = split_loxodromic(factors.front().map, opt);
    factors.erase(factors.begin());
    factors.insert(factors.begin(), {std::move(f1), std::move(f2)});
  }

  FactorizationCertificate cert;
  cert.fiber = fiber;
  cert.input = g;
  std::vector<MapPtr> word_parts;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    i64 p = exponents[i];
    MapPtr gi = power_root_conjugate(factors[i], std::llabs(p), ro.resolution);
    if (p < 0) gi = invert(gi);
    cert.terms.push_back({gi, p});
    word_parts.push_back(map_power(gi, p));
  }
  MapPtr word = compose(std::move(word_parts));
  cert.report = verify_identity(*g, *word, ro.window, ro.grid, ro.tolerance);

  // Nontriviality: each factor must move some grid point.
  Grid coarse{(fiber == Fiber::Circle) ? 16 : 1, 64};
  for (const auto& term : cert.terms) {
    double moved = sup_distance(*term.map, *identity(fiber), ro.window, coarse);
    if (!(moved > ro.tolerance)) {
      cert.report.pass = false;
      cert.report.failures.push_back({0.0, 0.0, 0.0});
      break;
    }
  }
  return cert;
}

}  // namespace cw
