#pragma once

#include <string>
#include <vector>

#include "commwidth/suited.hpp"

namespace cw {

// Quantitative evidence attached to a certificate: where it was checked, how
// finely, and how badly it failed if it did.
struct VerificationReport {
  Window window;
  Grid grid;
  double tolerance = 1e-9;
  double max_error = 0.0;
  bool pass = true;
  // Worst grid points (up to 5), each (theta, t, error), worst first.
  struct WorstPoint {
    double theta;
    double t;
    double error;
  };
  std::vector<WorstPoint> failures;
  i64 min_progress = 0;  // dynamics only: worst per-step band-index progress
};

// Grid comparison of two maps under the product metric.
VerificationReport verify_identity(const Map& lhs, const Map& rhs, Window window, Grid grid,
                                   double tol);

// Interior containment of Sigma_k U f(Sigma_k) in A_k with the stored margin,
// for every band k in [k_lo, k_hi].
VerificationReport verify_suitedness(const Map& f, const SuitedDecomposition& suited, i64 k_lo,
                                     i64 k_hi, const CurveOptions& opt = {});

// Monotone band progress of iterated sample points toward the declared sink.
VerificationReport verify_dynamics(const LoxodromicCertificate& cert, int iterations,
                                   int samples);

}  // namespace cw
