#pragma once

#include <optional>

#include "commwidth/suited.hpp"
#include "commwidth/verify.hpp"

namespace cw {

// Tunables of the factorization pipeline.  Unset fields resolve to
// fiber-dependent defaults: line = window [-50,50], 10^4 grid points,
// tolerance 1e-9; cylinder = S^1 x [-20,20], 200x200 grid, tolerance 1e-6.
struct PipelineOptions {
  std::optional<double> tolerance;
  std::optional<Window> window;
  std::optional<Grid> grid;
  int resolution = 1024;
  double margin = 0.25;
  i64 window_w = 10000;
  i64 horizon = 1;
  int certify_iterations = 32;
  int certify_samples = 8;

  struct Resolved {
    double tolerance;
    double certify_tol;  // band-transport slack; wider on the circle where
                         // straightened levels carry curve-sampling error
    Window window;
    Grid grid;
    int resolution;
    double margin;
    i64 window_w;
    i64 horizon;
    int certify_iterations;
    int certify_samples;
  };
  Resolved resolve(Fiber f) const;
};

// The translation-like map g' with g'(A_k) = A_{k+1}: affine from band to
// band, identity on theta, exact at the boundaries.
class BoundaryShift final : public Map {
 public:
  BoundaryShift(Fiber f, LatticePtr bands) : Map(f), bands_(std::move(bands)) {}
  Pt forward(Pt p) const override { return {p.theta, shift(p.t, +1)}; }
  Pt backward(Pt p) const override { return {p.theta, shift(p.t, -1)}; }
  void to_json(json& out) const override;
  const LatticePtr& bands() const { return bands_; }

 private:
  double shift(double t, int dir) const;
  LatticePtr bands_;
};

// The disjoint-support product h of per-band straighteners: evaluating at p
// locates p's band and applies only that band's factor.  Identity outside the
// bands it carries.
class BandedProduct final : public Map {
 public:
  // Live product: straighteners are built lazily as bands materialize.
  BandedProduct(SuitedPtr suited, MapPtr f, MapPtr gprime, CurveOptions curve);
  // Frozen product restored from a certificate.
  struct FrozenBand {
    double lo, hi;
    MapPtr map;
  };
  BandedProduct(Fiber fiber, std::map<i64, FrozenBand> bands);

  Pt forward(Pt p) const override { return apply(p, false); }
  Pt backward(Pt p) const override { return apply(p, true); }
  void to_json(json& out) const override;

  // The straightener carried by band k (built on demand when live).
  MapPtr band_factor(i64 k) const;

 private:
  Pt apply(Pt p, bool inverse) const;
  const LevelProbe& marker_probe(i64 j) const;
  double edge_top(i64 k) const;

  SuitedPtr suited_;  // null when frozen
  MapPtr f_, gprime_;
  CurveOptions curve_;
  mutable std::map<i64, FrozenBand> bands_;
  mutable std::map<i64, LevelProbe> probes_;
  mutable std::mutex mu_;
};

// Identification of two fundamental bands realized as a convex combination of
// increasing degree-1 lifts of the boundary angle maps.
struct BandChart {
  double lo = 0.0, hi = 1.0;
  std::vector<double> lift_off;  // Theta~(j/K) - j/K; empty = identity angle map
  double max_off = 0.0;

  double lift(double x) const {
    if (lift_off.empty()) return x;
    return x + interp_periodic(lift_off, x);
  }
};

// The conjugating map c with c o sigma o c^{-1} = tau: a point in sigma's
// band n is pulled to the fundamental band, identified with tau's fundamental
// band through the charts, and pushed back out to tau's band n.  Band
// boundaries transport exactly under both dynamics, so c is continuous
// across bands and the conjugation identity holds pointwise, not just
// approximately.  sigma/tau here are stored normalized so that each carries
// band k to band k+1.
class ConjugatorMap final : public Map {
 public:
  // pins: optional interior nodes (s_sigma, s_tau) of a piecewise linear
  // level reparametrization applied inside the fundamental band.  They fix
  // the orbit-class identification; any choice yields an exact conjugacy,
  // but an identification misaligned with the local scales of the two
  // dynamics is re-amplified by the chained evaluation.
  ConjugatorMap(Fiber fiber, MapPtr sigma, LatticePtr sigma_bands, BandChart sigma_chart,
                MapPtr tau, LatticePtr tau_bands, BandChart tau_chart,
                std::vector<std::pair<double, double>> pins = {});

  Pt forward(Pt p) const override;
  Pt backward(Pt p) const override;
  void to_json(json& out) const override;

 private:
  std::pair<double, double> chart_inv(const BandChart& ch, Pt p) const;  // (theta-param, s)
  Pt chart_fwd(const BandChart& ch, double x, double s) const;
  double pin_map(double s, bool inverse) const;
  // Circle-fiber path: the fundamental domain is bounded above by the true
  // image curve of the base circle, evaluated exactly on demand, so the
  // conjugation identity does not inherit curve-sampling error.
  double lift_exact(const Map& m, const BandChart& ch, double x) const;
  Pt dom_chart_fwd(const Map& m, const BandChart& ch, double x, double s) const;
  std::pair<double, double> dom_chart_inv(const Map& m, const BandChart& ch, Pt q) const;
  i64 locate_domain(const Map& m, double base, Pt& q) const;

  MapPtr sigma_, tau_;
  LatticePtr sigma_bands_, tau_bands_;
  BandChart sigma_chart_, tau_chart_;
  std::vector<std::pair<double, double>> pins_;
  double bisect_tol_ = 1e-12;
};

MapPtr build_vertical_shift(SuitedPtr suited);

// FiberBump mapping the graph of `curve` onto the level `target`, supported
// in the open band (lo, hi).  Throws Err::BandViolation when curve or target
// leave the open band.
MapPtr build_straightener(const GraphCurve& curve, double lo, double hi, double target);

struct AssembledPair {
  MapPtr g;
  SuitedPtr suited;
  LoxodromicCertificate cert_g;   // bands A_k
  LoxodromicCertificate cert_gf;  // bands B_k between consecutive markers
};

AssembledPair assemble_g(MapPtr f, SuitedPtr suited, const PipelineOptions::Resolved& opt);

// Conjugator of two certified loxodromic maps sharing sink and source
// orientation.  Postcondition: sup_distance(c o sigma o c^-1, tau) stays
// within the pipeline tolerance on the verification window.
MapPtr conjugator(const LoxodromicCertificate& sigma, const LoxodromicCertificate& tau,
                  int resolution);

struct FactorizationCertificate {
  Fiber fiber = Fiber::Point;
  MapPtr input;
  // Commutator claim: input = a o b o a^-1 o b^-1.
  MapPtr a, b;
  // Power-word claim: input = prod terms[i].map ^ terms[i].exponent.
  struct Term {
    MapPtr map;
    i64 exponent;
  };
  std::vector<Term> terms;
  VerificationReport report;
  SuitedPtr suited;  // attached for commutator certificates (plotting)
};

struct CommutatorResult {
  FactorizationCertificate cert;
  MapPtr g, c;
  LoxodromicCertificate cert_g, cert_gf;
  SuitedPtr suited;
};

CommutatorResult commutator_factorization(MapPtr f, const PipelineOptions& opt = {});

// f = f1.map o f2.map with both factors certified loxodromic.
std::pair<LoxodromicCertificate, LoxodromicCertificate> split_loxodromic(
    MapPtr f, const PipelineOptions& opt = {});

// g_i with g_i^p = fi.map, obtained by conjugating fi across the suited bands
// of its p-th power.
MapPtr power_root_conjugate(const LoxodromicCertificate& fi, i64 p, int resolution);

FactorizationCertificate power_word_decomposition(MapPtr g, const std::vector<i64>& exponents,
                                                  const PipelineOptions& opt = {});

// |n|-fold composition power, inverted for negative n.
MapPtr map_power(MapPtr m, i64 n);

// The map the certificate claims equals its input: a o b o a^-1 o b^-1, or
// the product of the power terms.
MapPtr claim_word(const FactorizationCertificate& cert);

}  // namespace cw
