#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "commwidth/geometry.hpp"

namespace cw {

using json = nlohmann::ordered_json;

class Map;
using MapPtr = std::shared_ptr<const Map>;

// An orientation-preserving homeomorphism of fiber x R, represented as a node
// of a closed-form expression tree.  Nodes are immutable after construction;
// forward/backward evaluation is pure.
class Map {
 public:
  explicit Map(Fiber f) : fiber_(f) {}
  virtual ~Map() = default;

  Fiber fiber() const { return fiber_; }

  virtual Pt forward(Pt p) const = 0;
  virtual Pt backward(Pt p) const = 0;  // exact inverse evaluation
  virtual void to_json(json& out) const = 0;

 private:
  Fiber fiber_;
};

class IdentityMap final : public Map {
 public:
  explicit IdentityMap(Fiber f) : Map(f) {}
  Pt forward(Pt p) const override { return p; }
  Pt backward(Pt p) const override { return p; }
  void to_json(json& out) const override { out["kind"] = "identity"; }
};

// t-only piecewise-linear bijection of R, identity on theta.
class VerticalPl final : public Map {
 public:
  VerticalPl(Fiber f, Pl1d pl) : Map(f), pl_(std::move(pl)) {}
  Pt forward(Pt p) const override { return {p.theta, pl_.value(p.t)}; }
  Pt backward(Pt p) const override { return {p.theta, pl_.inverse_value(p.t)}; }
  const Pl1d& pl() const { return pl_; }
  void to_json(json& out) const override {
    out["kind"] = "vertical_pl";
    json bps = json::array();
    for (const auto& [a, b] : pl_.breakpoints()) bps.push_back(json::array({a, b}));
    out["breakpoints"] = std::move(bps);
  }

 private:
  Pl1d pl_;
};

// Level-preserving rotation: (theta, t) -> (theta + alpha(t), t).  alpha is
// either constant or a continuous PL function of t (constant beyond its
// extreme breakpoints).
class TwistMap final : public Map {
 public:
  TwistMap(Fiber f, double alpha) : Map(f), const_alpha_(alpha) {
    if (f != Fiber::Circle) throw Error(Err::FiberMismatch, "Twist needs a circle fiber");
  }
  TwistMap(Fiber f, std::vector<std::pair<double, double>> alpha_bps)
      : Map(f), alpha_bps_(std::move(alpha_bps)) {
    if (f != Fiber::Circle) throw Error(Err::FiberMismatch, "Twist needs a circle fiber");
    if (alpha_bps_.empty()) throw Error(Err::InvalidSpec, "Twist level table is empty");
    for (std::size_t i = 1; i < alpha_bps_.size(); ++i)
      if (!(alpha_bps_[i].first > alpha_bps_[i - 1].first))
        throw Error(Err::InvalidSpec, "Twist level breakpoints must increase");
  }

  double alpha_at(double t) const {
    if (alpha_bps_.empty()) return const_alpha_;
    if (t <= alpha_bps_.front().first) return alpha_bps_.front().second;
    if (t >= alpha_bps_.back().first) return alpha_bps_.back().second;
    std::size_t lo = 0, hi = alpha_bps_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (alpha_bps_[mid].first <= t)
        lo = mid;
      else
        hi = mid;
    }
    double t0 = alpha_bps_[lo].first, t1 = alpha_bps_[hi].first;
    double a0 = alpha_bps_[lo].second, a1 = alpha_bps_[hi].second;
    return a0 + (t - t0) * ((a1 - a0) / (t1 - t0));
  }

  Pt forward(Pt p) const override { return {wrap_turn(p.theta + alpha_at(p.t)), p.t}; }
  Pt backward(Pt p) const override { return {wrap_turn(p.theta - alpha_at(p.t)), p.t}; }

  void to_json(json& out) const override {
    out["kind"] = "twist";
    if (alpha_bps_.empty()) {
      out["alpha"] = json{{"kind", "constant"}, {"value", const_alpha_}};
    } else {
      json bps = json::array();
      for (const auto& [t, a] : alpha_bps_) bps.push_back(json::array({t, a}));
      out["alpha"] = json{{"kind", "pl"}, {"breakpoints", std::move(bps)}};
    }
  }

 private:
  double const_alpha_ = 0.0;
  std::vector<std::pair<double, double>> alpha_bps_;  // empty => constant
};

// theta-preserving bump supported in a level band (l,u): for each theta a
// strictly increasing PL bijection of [l,u] fixing the endpoints, identity
// outside the band.  The interior breakpoints are given as tracks sampled at
// equispaced theta with periodic linear interpolation (one sample per track
// for Fiber::Point).
class FiberBump final : public Map {
 public:
  struct Track {
    std::vector<double> t_in;
    std::vector<double> t_out;
  };

  FiberBump(Fiber f, double lo, double hi, std::vector<Track> tracks)
      : Map(f), lo_(lo), hi_(hi), tracks_(std::move(tracks)) {
    validate();
  }

  double band_lo() const { return lo_; }
  double band_hi() const { return hi_; }
  const std::vector<Track>& tracks() const { return tracks_; }

  Pt forward(Pt p) const override { return apply(p, /*inverse=*/false); }
  Pt backward(Pt p) const override { return apply(p, /*inverse=*/true); }

  void to_json(json& out) const override {
    out["kind"] = "fiber_bump";
    out["band"] = json::array({lo_, hi_});
    json tr = json::array();
    for (const auto& t : tracks_) tr.push_back(json{{"in", t.t_in}, {"out", t.t_out}});
    out["tracks"] = std::move(tr);
  }

 private:
  void validate() const {
    if (!(lo_ < hi_)) throw Error(Err::InvalidSpec, "FiberBump band is empty");
    std::size_t k = 0;
    for (const auto& tr : tracks_) {
      if (tr.t_in.empty() || tr.t_in.size() != tr.t_out.size())
        throw Error(Err::InvalidSpec, "FiberBump track sample mismatch");
      if (k == 0) k = tr.t_in.size();
      if (tr.t_in.size() != k) throw Error(Err::InvalidSpec, "FiberBump track lengths differ");
    }
    for (std::size_t j = 0; j < k; ++j) {
      double prev_in = lo_, prev_out = lo_;
      for (const auto& tr : tracks_) {
        if (!(tr.t_in[j] > prev_in) || !(tr.t_in[j] < hi_) || !(tr.t_out[j] > prev_out) ||
            !(tr.t_out[j] < hi_))
          throw Error(Err::InvalidSpec, "FiberBump tracks must stay strictly inside the band, increasing");
        prev_in = tr.t_in[j];
        prev_out = tr.t_out[j];
      }
    }
    if (fiber() == Fiber::Point && k != 1)
      throw Error(Err::InvalidSpec, "FiberBump over a point fiber takes one sample per track");
  }

  Pt apply(Pt p, bool inverse) const {
    if (!(p.t > lo_) || !(p.t < hi_)) return p;  // bit-exact identity outside the open band
    double prev_x = lo_, prev_y = lo_;
    double x = p.t;
    for (const auto& tr : tracks_) {
      double bx = interp_periodic(inverse ? tr.t_out : tr.t_in, p.theta);
      double by = interp_periodic(inverse ? tr.t_in : tr.t_out, p.theta);
      if (x == bx) return {p.theta, by};  // exact at breakpoints
      if (x < bx) {
        double y = prev_y + (x - prev_x) * ((by - prev_y) / (bx - prev_x));
        return {p.theta, y};
      }
      prev_x = bx;
      prev_y = by;
    }
    double y = prev_y + (x - prev_x) * ((hi_ - prev_y) / (hi_ - prev_x));
    return {p.theta, y};
  }

  double lo_, hi_;
  std::vector<Track> tracks_;
};

// t-only monotone cubic interpolant (Fritsch-Carlson tangents) through
// strictly increasing knots, affinely extended with the endpoint tangents.
// The inverse is evaluated by monotone bisection.
class MonotoneSmooth final : public Map {
 public:
  MonotoneSmooth(Fiber f, std::vector<std::pair<double, double>> knots)
      : Map(f), knots_(std::move(knots)) {
    if (knots_.size() < 2) throw Error(Err::InvalidSpec, "MonotoneSmooth needs >= 2 knots");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i].first > knots_[i - 1].first) || !(knots_[i].second > knots_[i - 1].second))
        throw Error(Err::InvalidSpec, "MonotoneSmooth knots must strictly increase");
    build_tangents();
  }

  Pt forward(Pt p) const override { return {p.theta, value(p.t)}; }
  Pt backward(Pt p) const override { return {p.theta, inverse_value(p.t)}; }

  void to_json(json& out) const override {
    out["kind"] = "monotone_smooth";
    json kn = json::array();
    for (const auto& [x, y] : knots_) kn.push_back(json::array({x, y}));
    out["knots"] = std::move(kn);
  }

  double value(double x) const {
    const std::size_t n = knots_.size();
    if (x <= knots_.front().first) return knots_.front().second + tan_.front() * (x - knots_.front().first);
    if (x >= knots_.back().first) return knots_.back().second + tan_.back() * (x - knots_.back().first);
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (knots_[mid].first <= x)
        lo = mid;
      else
        hi = mid;
    }
    double h = knots_[hi].first - knots_[lo].first;
    double s = (x - knots_[lo].first) / h;
    double y0 = knots_[lo].second, y1 = knots_[hi].second;
    double m0 = tan_[lo] * h, m1 = tan_[hi] * h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * m1;
  }

  double inverse_value(double y) const {
    if (y <= knots_.front().second)
      return knots_.front().first + (y - knots_.front().second) / tan_.front();
    if (y >= knots_.back().second)
      return knots_.back().first + (y - knots_.back().second) / tan_.back();
    double lo = knots_.front().first, hi = knots_.back().first;
    for (int i = 0; i < 120 && hi - lo > 1e-14 * std::max(1.0, std::fabs(lo)); ++i) {
      double mid = 0.5 * (lo + hi);
      if (value(mid) < y)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  void build_tangents() {
    const std::size_t n = knots_.size();
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (knots_[i + 1].second - knots_[i].second) / (knots_[i + 1].first - knots_[i].first);
    tan_.assign(n, 0.0);
    tan_[0] = d[0];
    tan_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) tan_[i] = 0.5 * (d[i - 1] + d[i]);
    // Fritsch-Carlson limiter keeps the interpolant monotone.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double a = tan_[i] / d[i], b = tan_[i + 1] / d[i];
      double r = a * a + b * b;
      if (r > 9.0) {
        double tau = 3.0 / std::sqrt(r);
        tan_[i] = tau * a * d[i];
        tan_[i + 1] = tau * b * d[i];
      }
    }
  }

  std::vector<std::pair<double, double>> knots_;
  std::vector<double> tan_;
};

// Composition applied right-to-left: children[0] o children[1] o ...
class ComposeMap final : public Map {
 public:
  ComposeMap(Fiber f, std::vector<MapPtr> children) : Map(f), children_(std::move(children)) {
    for (const auto& c : children_)
      if (c->fiber() != f) throw Error(Err::FiberMismatch, "compose over mixed fiber kinds");
  }

  Pt forward(Pt p) const override {
    for (auto it = children_.rbegin(); it != children_.rend(); ++it) p = (*it)->forward(p);
    return p;
  }
  Pt backward(Pt p) const override {
    for (const auto& c : children_) p = c->backward(p);
    return p;
  }

  const std::vector<MapPtr>& children() const { return children_; }

  void to_json(json& out) const override {
    out["kind"] = "compose";
    json ch = json::array();
    for (const auto& c : children_) {
      json j = json::object();
      c->to_json(j);
      ch.push_back(std::move(j));
    }
    out["children"] = std::move(ch);
  }

 private:
  std::vector<MapPtr> children_;
};

class InverseMap final : public Map {
 public:
  explicit InverseMap(MapPtr child) : Map(child->fiber()), child_(std::move(child)) {}
  Pt forward(Pt p) const override { return child_->backward(p); }
  Pt backward(Pt p) const override { return child_->forward(p); }
  const MapPtr& child() const { return child_; }
  void to_json(json& out) const override {
    out["kind"] = "inverse";
    json j = json::object();
    child_->to_json(j);
    out["child"] = std::move(j);
  }

 private:
  MapPtr child_;
};

inline MapPtr identity(Fiber f) { return std::make_shared<IdentityMap>(f); }

inline bool is_identity(const MapPtr& m) {
  return dynamic_cast<const IdentityMap*>(m.get()) != nullptr;
}

// Lazy inversion; double inversion collapses to the original node.
inline MapPtr invert(MapPtr m) {
  if (auto inv = std::dynamic_pointer_cast<const InverseMap>(m)) return inv->child();
  return std::make_shared<InverseMap>(std::move(m));
}

inline MapPtr compose(std::vector<MapPtr> ms) {
  if (ms.empty()) throw Error(Err::InvalidSpec, "compose of nothing has no fiber; use identity()");
  if (ms.size() == 1) return ms[0];
  return std::make_shared<ComposeMap>(ms[0]->fiber(), std::move(ms));
}

inline MapPtr compose_or_identity(Fiber f, std::vector<MapPtr> ms) {
  if (ms.empty()) return identity(f);
  return compose(std::move(ms));
}

// n-fold iterate; negative n iterates the inverse.
inline Pt apply_iterate(const Map& m, Pt p, i64 n) {
  if (n >= 0)
    for (i64 i = 0; i < n; ++i) p = m.forward(p);
  else
    for (i64 i = 0; i < -n; ++i) p = m.backward(p);
  return p;
}

// Top-level evaluation with a finiteness guard.
inline Pt eval(const Map& m, Pt p) {
  Pt q = m.forward(p);
  if (!std::isfinite(q.t) || !std::isfinite(q.theta))
    throw Error(Err::NonFinite, "evaluation left the representable range");
  return q;
}

inline Pt eval_inverse(const Map& m, Pt p) {
  Pt q = m.backward(p);
  if (!std::isfinite(q.t) || !std::isfinite(q.theta))
    throw Error(Err::NonFinite, "evaluation left the representable range");
  return q;
}

inline json map_to_json(const Map& m) {
  json j = json::object();
  m.to_json(j);
  return j;
}

}  // namespace cw
