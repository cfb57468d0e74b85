#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "commwidth/errors.hpp"

namespace cw {

using i64 = std::int64_t;

enum class Fiber { Point, Circle };

// A point of fiber x R.  theta is in turns in [0,1) and is ignored for
// Fiber::Point; t is the level coordinate.
struct Pt {
  double theta = 0.0;
  double t = 0.0;
};

// Reduce an angle (in turns) to [0,1).
inline double wrap_turn(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;  // floor rounding at negative epsilons
  return y;
}

// Distance on the circle of circumference 1.
inline double circle_dist(double a, double b) {
  double d = std::fabs(wrap_turn(a) - wrap_turn(b));
  return std::min(d, 1.0 - d);
}

inline double point_dist(Fiber fiber, const Pt& a, const Pt& b) {
  double dt = std::fabs(a.t - b.t);
  if (fiber == Fiber::Point) return dt;
  return std::max(dt, circle_dist(a.theta, b.theta));
}

struct Window {
  double lo = -50.0;
  double hi = 50.0;
};

struct Grid {
  int theta_n = 1;   // number of theta samples in [0,1)
  int t_n = 10000;   // number of level samples over the window (inclusive ends)
};

// Linear interpolation of K samples v[j] at theta = j/K, extended 1-periodically.
inline double interp_periodic(std::span<const double> v, double theta) {
  const std::size_t k = v.size();
  if (k == 1) return v[0];
  double x = wrap_turn(theta) * static_cast<double>(k);
  auto j = static_cast<std::size_t>(x);
  if (j >= k) j = k - 1;
  double frac = x - static_cast<double>(j);
  double a = v[j];
  double b = v[(j + 1) % k];
  return a + frac * (b - a);
}

// A strictly increasing piecewise-linear bijection given by breakpoints
// (x_i, y_i), with affine extension beyond the extreme breakpoints using the
// terminal slopes (slope 1 when there is a single breakpoint).
class Pl1d {
 public:
  Pl1d() = default;
  explicit Pl1d(std::vector<std::pair<double, double>> bps) : bps_(std::move(bps)) {
    validate();
  }

  const std::vector<std::pair<double, double>>& breakpoints() const { return bps_; }

  double value(double x) const { return eval_impl(x, /*inverse=*/false); }
  double inverse_value(double y) const { return eval_impl(y, /*inverse=*/true); }

  Pl1d inverse() const {
    std::vector<std::pair<double, double>> sw;
    sw.reserve(bps_.size());
    for (const auto& [x, y] : bps_) sw.emplace_back(y, x);
    return Pl1d(std::move(sw));
  }

 private:
  void validate() const {
    if (bps_.empty()) throw Error(Err::InvalidSpec, "PL map needs at least one breakpoint");
    for (const auto& [x, y] : bps_) {
      if (!std::isfinite(x) || !std::isfinite(y))
        throw Error(Err::InvalidSpec, "non-finite PL breakpoint");
    }
    for (std::size_t i = 1; i < bps_.size(); ++i) {
      if (!(bps_[i].first > bps_[i - 1].first) || !(bps_[i].second > bps_[i - 1].second))
        throw Error(Err::InvalidSpec, "PL breakpoints must be strictly increasing in both coordinates");
    }
  }

  double eval_impl(double x, bool inverse) const {
    auto coord = [&](const std::pair<double, double>& p) { return inverse ? p.second : p.first; };
    auto other = [&](const std::pair<double, double>& p) { return inverse ? p.first : p.second; };
    const std::size_t n = bps_.size();
    if (n == 1) return other(bps_[0]) + (x - coord(bps_[0]));
    std::size_t lo = 0, hi = n - 1;
    if (x <= coord(bps_[0])) {
      lo = 0;
      hi = 1;
    } else if (x >= coord(bps_[n - 1])) {
      lo = n - 2;
      hi = n - 1;
    } else {
      while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (coord(bps_[mid]) <= x)
          lo = mid;
        else
          hi = mid;
      }
    }
    if (x == coord(bps_[lo])) return other(bps_[lo]);  // exact at breakpoints
    if (x == coord(bps_[hi])) return other(bps_[hi]);
    double x0 = coord(bps_[lo]), x1 = coord(bps_[hi]);
    double y0 = other(bps_[lo]), y1 = other(bps_[hi]);
    return y0 + (x - x0) * ((y1 - y0) / (x1 - x0));
  }

  std::vector<std::pair<double, double>> bps_;
};

}  // namespace cw
