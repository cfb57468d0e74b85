#include "commwidth/curve.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cw {

namespace {

struct LiftSamples {
  std::vector<double> lift;    // Theta~(j/K), continuous unwrap, lift[K] = lift[0] + 1
  std::vector<double> levels;  // T(j/K)
  double min_step = 0.0;
};

// Sample the image of the level circle and unwrap the angle component into a
// continuous lift.  min_step <= 0 means the sampled map is not certifiable as
// strictly increasing at this resolution.
LiftSamples sample_level(const Map& m, double t0, int res) {
  LiftSamples out;
  out.lift.resize(static_cast<std::size_t>(res) + 1);
  out.levels.resize(static_cast<std::size_t>(res) + 1);
  double prev_angle = 0.0;
  double min_step = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int j = 0; j <= res; ++j) {
    double theta = static_cast<double>(j % res) / res;
    Pt q = eval(m, {theta, t0});
    double a = wrap_turn(q.theta);
    if (j == 0) {
      out.lift[0] = a;
    } else {
      double d = a - prev_angle;
      d -= std::floor(d);     // wrap into [0,1)
      if (d > 0.75) d -= 1.0; // read near-full steps as small backward ones
      min_step = std::min(min_step, d);
      total += d;
      out.lift[static_cast<std::size_t>(j)] = out.lift[static_cast<std::size_t>(j - 1)] + d;
    }
    out.levels[static_cast<std::size_t>(j)] = q.t;
    prev_angle = a;
  }
  out.min_step = min_step;
  // Degree-one closure: the lift must gain exactly one turn over the period.
  if (std::fabs(total - 1.0) > 0.25) out.min_step = -1.0;
  return out;
}

// Piecewise linear interpolation error estimate from second differences; the
// angle term matters where the angle map compresses the grid and level detail
// concentrates between abscissae.
double interp_error_estimate(const LiftSamples& s) {
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < s.levels.size(); ++j) {
    double d2l = std::fabs(s.levels[j + 1] - 2.0 * s.levels[j] + s.levels[j - 1]);
    double du = std::max(s.lift[j + 1] - s.lift[j - 1], 1e-12);
    double slope = std::fabs(s.levels[j + 1] - s.levels[j - 1]) / du;
    double d2a = std::fabs(s.lift[j + 1] - 2.0 * s.lift[j] + s.lift[j - 1]);
    worst = std::max(worst, d2l + d2a * slope);
  }
  return worst;
}

// Adaptive sampling at t0 until the lift is certifiably strictly increasing
// and the sampled curve interpolates within the accuracy budget.
LiftSamples sample_certified(const Map& m, double t0, const CurveOptions& opt, int& res) {
  res = opt.resolution;
  for (;;) {
    LiftSamples s = sample_level(m, t0, res);
    double margin = s.min_step * res;  // slope margin in lift units
    bool monotone = s.min_step > 0.0 && margin >= opt.monotonicity_margin;
    if ((monotone && interp_error_estimate(s) <= opt.accuracy) || res >= opt.max_resolution) {
      if (s.min_step > 0.0) return s;
      std::ostringstream msg;
      msg << "image of level " << t0 << " is not certifiable as a graph at resolution " << res;
      throw Error(Err::GraphViolation, msg.str());
    }
    res *= 2;
  }
}

// Resample levels to equispaced abscissae: gamma(Theta(theta)) = T(theta).
std::vector<double> resample_equispaced(const std::vector<double>& lift,
                                        const std::vector<double>& levels, int res) {
  std::vector<double> out(static_cast<std::size_t>(res));
  double base = lift[0];
  for (int j = 0; j < res; ++j) {
    // smallest lift value >= base congruent to j/res mod 1
    double x = static_cast<double>(j) / res;
    double target = x + std::ceil(base - x);
    target = std::min(std::max(target, lift.front()), lift.back());
    auto it = std::upper_bound(lift.begin(), lift.end(), target);
    std::size_t seg = (it == lift.begin()) ? 0 : static_cast<std::size_t>(it - lift.begin()) - 1;
    if (seg + 1 >= lift.size()) seg = lift.size() - 2;
    double u0 = lift[seg], u1 = lift[seg + 1];
    double frac = (target - u0) / (u1 - u0);
    out[static_cast<std::size_t>(j)] = levels[seg] + frac * (levels[seg + 1] - levels[seg]);
  }
  return out;
}

GraphCurve finish_curve(std::vector<double> values, int res) {
  GraphCurve c;
  c.fiber = Fiber::Circle;
  c.res = res;
  c.values = std::move(values);
  c.vmin = c.values[0];
  c.vmax = c.values[0];
  for (double v : c.values) {
    c.vmin = std::min(c.vmin, v);
    c.vmax = std::max(c.vmax, v);
  }
  return c;
}

}  // namespace

GraphCurve level_image(const Map& m, double t0, const CurveOptions& opt) {
  if (m.fiber() == Fiber::Point) {
    Pt q = eval(m, {0.0, t0});
    return GraphCurve::constant(Fiber::Point, q.t, 1);
  }
  int res = 0;
  LiftSamples s = sample_certified(m, t0, opt, res);
  return finish_curve(resample_equispaced(s.lift, s.levels, res), res);
}

LevelProbe level_probe(const Map& m, double t0, double step, const CurveOptions& opt) {
  LevelProbe out;
  if (m.fiber() == Fiber::Point) {
    double v0 = eval(m, {0.0, t0}).t;
    double vm = eval(m, {0.0, t0 - step}).t;
    double vp = eval(m, {0.0, t0 + step}).t;
    out.curve = GraphCurve::constant(Fiber::Point, v0, 1);
    out.q_lo.assign(1, (v0 - vm) / step);
    out.q_hi.assign(1, (vp - v0) / step);
    return out;
  }
  int res = 0;
  LiftSamples s = sample_certified(m, t0, opt, res);
  // Sample the adjacent levels at the same fiber angles; their own angle maps
  // differ from t0's only at order `step`, so t0's lift resamples all three.
  std::vector<double> lo_levels(static_cast<std::size_t>(res) + 1);
  std::vector<double> hi_levels(static_cast<std::size_t>(res) + 1);
  for (int j = 0; j <= res; ++j) {
    double theta = static_cast<double>(j % res) / res;
    lo_levels[static_cast<std::size_t>(j)] = eval(m, {theta, t0 - step}).t;
    hi_levels[static_cast<std::size_t>(j)] = eval(m, {theta, t0 + step}).t;
  }
  std::vector<double> v0 = resample_equispaced(s.lift, s.levels, res);
  std::vector<double> vm = resample_equispaced(s.lift, lo_levels, res);
  std::vector<double> vp = resample_equispaced(s.lift, hi_levels, res);
  out.q_lo.resize(static_cast<std::size_t>(res));
  out.q_hi.resize(static_cast<std::size_t>(res));
  for (int j = 0; j < res; ++j) {
    auto i = static_cast<std::size_t>(j);
    out.q_lo[i] = (v0[i] - vm[i]) / step;
    out.q_hi[i] = (vp[i] - v0[i]) / step;
  }
  out.curve = finish_curve(std::move(v0), res);
  return out;
}

std::vector<double> boundary_lift(const Map& m, double t0, int resolution) {
  if (m.fiber() == Fiber::Point) return {};
  LiftSamples s = sample_level(m, t0, resolution);
  if (!(s.min_step > 0.0))
    throw Error(Err::GraphViolation, "boundary angle map fails sampled degree-1 monotonicity");
  std::vector<double> off(static_cast<std::size_t>(resolution));
  for (int j = 0; j < resolution; ++j)
    off[static_cast<std::size_t>(j)] =
        s.lift[static_cast<std::size_t>(j)] - static_cast<double>(j) / resolution;
  return off;
}

OrientationReport check_orientation(const Map& m, Window window, int samples) {
  OrientationReport rep;
  auto fail = [&](const std::string& why) {
    rep.pass = false;
    rep.detail = why;
    return rep;
  };

  const int theta_n = (m.fiber() == Fiber::Circle) ? 8 : 1;
  // Strict level monotonicity along sampled fibers.
  for (int i = 0; i < theta_n; ++i) {
    double theta = static_cast<double>(i) / theta_n;
    double prev = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < samples; ++j) {
      double t = window.lo + (window.hi - window.lo) * j / (samples - 1);
      Pt q;
      try {
        q = eval(m, {theta, t});
      } catch (const Error&) {
        return fail("non-finite image on the sampled window");
      }
      if (!(q.t > prev)) return fail("level along a fiber is not strictly increasing");
      prev = q.t;
    }
  }

  // Degree-one increasing angle maps on sampled levels.
  if (m.fiber() == Fiber::Circle) {
    for (int j = 0; j < 5; ++j) {
      double t = window.lo + (window.hi - window.lo) * j / 4.0;
      try {
        boundary_lift(m, t, 256);
      } catch (const Error&) {
        return fail("angle map on a sampled level is not an increasing degree-1 circle map");
      }
    }
  }

  // End preservation: images of (theta, -T) and (theta, +T) must have the
  // right level signs for some T at or beyond the window extremes.
  double T = std::max(std::fabs(window.lo), std::fabs(window.hi));
  bool ends_ok = false;
  for (int k = 0; k < 40; ++k) {
    double lo_img, hi_img;
    try {
      lo_img = eval(m, {0.0, -T}).t;
      hi_img = eval(m, {0.0, T}).t;
    } catch (const Error&) {
      return fail("non-finite image probing the ends");
    }
    if (lo_img < 0.0 && hi_img > 0.0) {
      ends_ok = true;
      break;
    }
    if (lo_img > hi_img) return fail("ends are swapped");
    T *= 2.0;
    if (T > 1e12) break;
  }
  if (!ends_ok) return fail("could not certify end preservation");
  return rep;
}

double sup_distance(const Map& a, const Map& b, Window window, Grid grid) {
  if (a.fiber() != b.fiber()) throw Error(Err::FiberMismatch, "sup_distance over mixed fibers");
  const int theta_n = (a.fiber() == Fiber::Circle) ? std::max(1, grid.theta_n) : 1;
  const int t_n = std::max(2, grid.t_n);
  double worst = 0.0;
  for (int i = 0; i < theta_n; ++i) {
    double theta = static_cast<double>(i) / theta_n;
    for (int j = 0; j < t_n; ++j) {
      double t = window.lo + (window.hi - window.lo) * j / (t_n - 1);
      Pt pa = eval(a, {theta, t});
      Pt pb = eval(b, {theta, t});
      worst = std::max(worst, point_dist(a.fiber(), pa, pb));
    }
  }
  return worst;
}

}  // namespace cw
