#pragma once

#include <vector>

#include "commwidth/map_expr.hpp"

namespace cw {

// An embedded circle that is a graph over the fiber: values[j] = gamma(j/res)
// with periodic linear interpolation.  For Fiber::Point it degenerates to a
// single level (res == 1).
struct GraphCurve {
  Fiber fiber = Fiber::Point;
  int res = 1;
  std::vector<double> values;
  double vmin = 0.0;
  double vmax = 0.0;

  double value(double theta) const {
    if (fiber == Fiber::Point) return values[0];
    return interp_periodic(values, theta);
  }

  static GraphCurve constant(Fiber f, double level, int res) {
    GraphCurve c;
    c.fiber = f;
    c.res = (f == Fiber::Point) ? 1 : res;
    c.values.assign(static_cast<std::size_t>(c.res), level);
    c.vmin = c.vmax = level;
    return c;
  }
};

struct CurveOptions {
  int resolution = 1024;
  int max_resolution = 65536;
  double monotonicity_margin = 1e-6;  // doubles the sampling when tighter than this
  double accuracy = 1e-3;             // interpolation error budget, likewise
};

// Image of the level circle fiber x {t0} under m, certified as a graph curve.
// Throws Err::GraphViolation when the sampled angle map is not a strictly
// increasing degree-one circle map.
GraphCurve level_image(const Map& m, double t0, const CurveOptions& opt = {});

// Samples of the lift offset Theta~(j/K) - j/K of the angle component of m
// restricted to the level t0.  Empty for point fibers.  Same certification as
// level_image.
std::vector<double> boundary_lift(const Map& m, double t0, int resolution);

// level_image plus one-sided vertical difference quotients of the level map
// at t0, sampled at the same equispaced abscissae as the curve.
struct LevelProbe {
  GraphCurve curve;
  std::vector<double> q_lo;  // (T(t0) - T(t0 - step)) / step per abscissa
  std::vector<double> q_hi;  // (T(t0 + step) - T(t0)) / step per abscissa
};

LevelProbe level_probe(const Map& m, double t0, double step, const CurveOptions& opt = {});

struct OrientationReport {
  bool pass = true;
  std::string detail;
};

// Sampled evidence that m is orientation-preserving and end-fixing: strict
// level monotonicity along fibers, degree-one increasing angle maps on
// levels, and sign-preserving behavior at the ends (probed at growing |t|
// beyond the window when the window itself is too small to separate the
// ends).
OrientationReport check_orientation(const Map& m, Window window, int samples = 64);

// Max over the grid of the product-metric distance between a(p) and b(p).
double sup_distance(const Map& a, const Map& b, Window window, Grid grid);

}  // namespace cw
