#include "commwidth/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "commwidth/curve.hpp"

namespace cw {

namespace {

constexpr double kWidth = 800.0, kHeight = 600.0;
constexpr double kPadX = 20.0, kPadY = 20.0;
constexpr int kCurveRes = 1024;

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Frame {
  Window window;
  double x(double theta) const { return kPadX + theta * (kWidth - 2 * kPadX); }
  double y(double t) const {
    double s = (t - window.lo) / (window.hi - window.lo);
    return kHeight - kPadY - s * (kHeight - 2 * kPadY);
  }
};

void hline(std::ostringstream& out, const Frame& fr, double level, const char* cls,
           const char* color) {
  out << "  <line class=\"" << cls << "\" data-level=\"" << fmt(level, "%g") << "\" x1=\""
      << fmt(fr.x(0.0)) << "\" y1=\"" << fmt(fr.y(level)) << "\" x2=\"" << fmt(fr.x(1.0))
      << "\" y2=\"" << fmt(fr.y(level)) << "\" stroke=\"" << color << "\"/>\n";
}

void curve_path(std::ostringstream& out, const Frame& fr, const GraphCurve& c, const char* cls,
                const char* color) {
  if (c.fiber == Fiber::Point) {
    hline(out, fr, c.values[0], cls, color);
    return;
  }
  out << "  <path class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" d=\"";
  for (int j = 0; j <= c.res; ++j) {
    double theta = static_cast<double>(j) / c.res;
    double t = (j == c.res) ? c.values[0] : c.values[static_cast<std::size_t>(j)];
    out << (j == 0 ? "M" : " L") << fmt(fr.x(theta)) << " " << fmt(fr.y(t));
  }
  out << "\"/>\n";
}

void orbit(std::ostringstream& out, const Frame& fr, const Map& m, Pt start, int steps,
           const char* cls, const char* color) {
  out << "  <polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" points=\"";
  Pt p = start;
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) {
      out << " ";
      try {
        p = eval(m, p);
      } catch (const Error&) {
        break;
      }
    }
    double t = std::min(std::max(p.t, fr.window.lo), fr.window.hi);
    double theta = (m.fiber() == Fiber::Circle) ? p.theta : static_cast<double>(i) / steps;
    out << fmt(fr.x(theta)) << "," << fmt(fr.y(t));
  }
  out << "\"/>\n";
}

}  // namespace

std::string svg_plot(const FactorizationCertificate& cert) {
  if (!cert.input) throw Error(Err::InvalidSpec, "certificate has no input map");
  Frame fr{cert.report.window};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt(kWidth, "%g") << " "
      << fmt(kHeight, "%g") << "\">\n";
  out << "  <rect width=\"" << fmt(kWidth, "%g") << "\" height=\"" << fmt(kHeight, "%g")
      << "\" fill=\"white\"/>\n";

  CurveOptions copt;
  copt.resolution = kCurveRes;

  if (cert.suited) {
    const SuitedDecomposition& s = *cert.suited;
    for (i64 k = s.band_lo(); k <= s.band_hi() + 1; ++k) {
      double m = s.boundary(k);
      if (m < fr.window.lo || m > fr.window.hi) continue;
      hline(out, fr, m, "band", "#888888");
    }
    for (i64 k = s.band_lo(); k <= s.band_hi(); ++k) {
      double t = s.marker(k);
      if (t < fr.window.lo || t > fr.window.hi) continue;
      hline(out, fr, t, "marker", "#1f77b4");
      try {
        GraphCurve img = level_image(*cert.input, t, copt);
        curve_path(out, fr, img, "image", "#d62728");
      } catch (const Error&) {
        // image not certifiable as a graph; skip the curve, keep the marker
      }
    }
  }

  double t0 = fr.window.lo + 0.35 * (fr.window.hi - fr.window.lo);
  if (!cert.terms.empty()) {
    orbit(out, fr, *cert.input, {0.5, t0}, 12, "orbit", "#2ca02c");
  } else if (cert.a && cert.b) {
    MapPtr g = invert(cert.a);
    MapPtr gf = compose({g, cert.input});
    orbit(out, fr, *g, {0.5, t0}, 12, "orbit orbit-g", "#2ca02c");
    orbit(out, fr, *gf, {0.5, t0}, 12, "orbit orbit-gf", "#9467bd");
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace cw
