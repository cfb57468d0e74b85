#include "commwidth/verify.hpp"

#include <algorithm>
#include <cmath>

namespace cw {

namespace {

void note_point(VerificationReport& rep, double theta, double t, double err) {
  rep.max_error = std::max(rep.max_error, err);
  rep.failures.push_back({theta, t, err});
  std::sort(rep.failures.begin(), rep.failures.end(),
            [](const auto& a, const auto& b) { return a.error > b.error; });
  if (rep.failures.size() > 5) rep.failures.resize(5);
}

}  // namespace

VerificationReport verify_identity(const Map& lhs, const Map& rhs, Window window, Grid grid,
                                   double tol) {
  if (lhs.fiber() != rhs.fiber()) throw Error(Err::FiberMismatch, "verify_identity over mixed fibers");
  VerificationReport rep;
  rep.window = window;
  rep.grid = grid;
  rep.tolerance = tol;
  const int theta_n = (lhs.fiber() == Fiber::Circle) ? std::max(1, grid.theta_n) : 1;
  const int t_n = std::max(2, grid.t_n);
  for (int i = 0; i < theta_n; ++i) {
    double theta = static_cast<double>(i) / theta_n;
    for (int j = 0; j < t_n; ++j) {
      double t = window.lo + (window.hi - window.lo) * j / (t_n - 1);
      Pt pa = eval(lhs, {theta, t});
      Pt pb = eval(rhs, {theta, t});
      double err = point_dist(lhs.fiber(), pa, pb);
      if (err > rep.max_error) note_point(rep, theta, t, err);
    }
  }
  rep.pass = rep.max_error < rep.tolerance;
  if (rep.pass) rep.failures.clear();
  return rep;
}

VerificationReport verify_suitedness(const Map& f, const SuitedDecomposition& suited, i64 k_lo,
                                     i64 k_hi, const CurveOptions& opt) {
  VerificationReport rep;
  rep.window = {suited.boundary(k_lo), suited.boundary(k_hi + 1)};
  rep.grid = {opt.resolution, 0};
  rep.tolerance = suited.margin();
  double worst_gap = std::numeric_limits<double>::infinity();
  for (i64 k = k_lo; k <= k_hi; ++k) {
    double lo = suited.boundary(k);
    double hi = suited.boundary(k + 1);
    double tk = suited.marker(k);
    GraphCurve img = level_image(f, tk, opt);
    double min_lvl = std::min(tk, img.vmin);
    double max_lvl = std::max(tk, img.vmax);
    worst_gap = std::min({worst_gap, min_lvl - lo, hi - max_lvl});
    if (!(min_lvl > lo) || !(max_lvl < hi))
      note_point(rep, 0.0, tk, std::max(lo - min_lvl, max_lvl - hi) + rep.tolerance);
  }
  // pass means every band keeps at least the margin of clearance
  rep.max_error = std::max(0.0, rep.tolerance - worst_gap);
  rep.pass = worst_gap >= rep.tolerance && rep.failures.empty();
  if (rep.pass) rep.failures.clear();
  return rep;
}

VerificationReport verify_dynamics(const LoxodromicCertificate& cert, int iterations,
                                   int samples) {
  VerificationReport rep;
  const auto& bands = *cert.bands;
  double lo = bands.level(bands.k_min());
  double hi = bands.level(bands.k_max());
  rep.window = {lo, hi};
  rep.grid = {1, samples};
  rep.tolerance = 0.0;
  i64 min_progress = iterations;
  bool ok = true;
  for (int dir = 0; dir < 2 && ok; ++dir) {
    for (int i = 0; i < samples && ok; ++i) {
      double frac = (samples == 1) ? 0.5 : static_cast<double>(i) / (samples - 1);
      Pt p{wrap_turn(0.37 * i), lo + (0.2 + 0.6 * frac) * (hi - lo)};
      i64 prev = locate_band_clamped(bands, p.t);
      for (int n = 0; n < iterations; ++n) {
        double before = p.t;
        p = (dir == 0) ? eval(*cert.map, p) : eval_inverse(*cert.map, p);
        i64 cur = locate_band_clamped(bands, p.t);
        i64 progress = (dir == 0) ? cert.sink * (cur - prev) : cert.sink * (prev - cur);
        bool saturated = cur < bands.k_min() || cur >= bands.k_max();
        bool level_ok = ((dir == 0) == (cert.sink > 0)) ? (p.t > before) : (p.t < before);
        if ((!saturated && progress < 1) || !level_ok) {
          ok = false;
          note_point(rep, p.theta, p.t, 1.0);
          break;
        }
        if (!saturated) min_progress = std::min(min_progress, progress);
        prev = cur;
        if (saturated) break;
      }
    }
  }
  rep.max_error = ok ? 0.0 : 1.0;
  rep.pass = ok;
  rep.min_progress = ok ? min_progress : 0;
  return rep;
}

}  // namespace cw
