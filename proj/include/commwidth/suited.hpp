#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "commwidth/curve.hpp"
#include "commwidth/map_expr.hpp"

namespace cw {

// A bi-infinite, lazily materialized strictly increasing sequence of levels.
// Band k is [level(k), level(k+1)].  Extension is synchronized so concurrent
// readers observe a consistent append-only sequence.
class BandLattice {
 public:
  virtual ~BandLattice() = default;
  virtual double level(i64 k) const = 0;  // throws Err::NotMaterialized when absent
  virtual bool try_materialize(i64 k) const = 0;
  virtual i64 k_min() const = 0;  // materialized boundary index range
  virtual i64 k_max() const = 0;
};

using LatticePtr = std::shared_ptr<const BandLattice>;

// Closed-form lattice level(k) = step*k + offset.
class AffineLattice final : public BandLattice {
 public:
  AffineLattice(double step, double offset) : step_(step), offset_(offset) {}
  double level(i64 k) const override { return step_ * static_cast<double>(k) + offset_; }
  bool try_materialize(i64 k) const override { return std::llabs(k) <= (1 << 30); }
  i64 k_min() const override { return -(1 << 30); }
  i64 k_max() const override { return 1 << 30; }

 private:
  double step_, offset_;
};

// Frozen lattice restored from a serialized certificate; cannot extend.
class FrozenLattice final : public BandLattice {
 public:
  FrozenLattice(i64 k0, std::vector<double> levels) : k0_(k0), levels_(std::move(levels)) {
    if (levels_.size() < 2) throw Error(Err::InvalidSpec, "lattice needs at least one band");
    for (std::size_t i = 1; i < levels_.size(); ++i)
      if (!(levels_[i] > levels_[i - 1]))
        throw Error(Err::InvalidSpec, "lattice levels must strictly increase");
  }
  double level(i64 k) const override {
    if (k < k0_ || k >= k0_ + static_cast<i64>(levels_.size()))
      throw Error(Err::NotMaterialized, "frozen lattice index out of range");
    return levels_[static_cast<std::size_t>(k - k0_)];
  }
  bool try_materialize(i64 k) const override {
    return k >= k0_ && k < k0_ + static_cast<i64>(levels_.size());
  }
  i64 k_min() const override { return k0_; }
  i64 k_max() const override { return k0_ + static_cast<i64>(levels_.size()) - 1; }

 private:
  i64 k0_;
  std::vector<double> levels_;
};

// View of a base lattice with bands grouped in runs of `stride`:
// level(k) = base.level(stride*k).  Used for the suited bands of p-th powers.
class StridedLattice final : public BandLattice {
 public:
  StridedLattice(LatticePtr base, i64 stride) : base_(std::move(base)), stride_(stride) {}
  double level(i64 k) const override { return base_->level(stride_ * k); }
  bool try_materialize(i64 k) const override {
    i64 j = stride_ * k;
    i64 step = (j >= base_->k_max()) ? 1 : -1;
    while (!(j >= base_->k_min() && j <= base_->k_max())) {
      i64 next = (step > 0) ? base_->k_max() + 1 : base_->k_min() - 1;
      if (!base_->try_materialize(next)) return false;
    }
    return true;
  }
  i64 k_min() const override {
    i64 lo = base_->k_min();
    return (lo >= 0) ? (lo + stride_ - 1) / stride_ : -((-lo) / stride_);
  }
  i64 k_max() const override {
    i64 hi = base_->k_max();
    return (hi >= 0) ? hi / stride_ : -((-hi + stride_ - 1) / stride_);
  }

 private:
  LatticePtr base_;
  i64 stride_;
};

// The integer lattice {m_k} of band boundaries plus marker levels {t_k}
// realizing round suited bands A_k = fiber x [m_k, m_{k+1}] with marker
// circles Sigma_k = fiber x {t_k} satisfying the interior-containment
// invariant with a quantitative margin.
class SuitedDecomposition : public std::enable_shared_from_this<SuitedDecomposition> {
 public:
  struct Config {
    double margin = 0.25;
    i64 window_w = 10000;   // search budget for the next admissible integer
    double level_cap = 1e8; // saturation magnitude: beyond it integer margins
                            // sink below the spacing of doubles and the
                            // lattice stops extending instead of degrading
    CurveOptions curve;
  };

  // Greedy construction seeded at integer level t0.
  SuitedDecomposition(MapPtr f, i64 t0, Config cfg);

  // Frozen (deserialized) decomposition.
  SuitedDecomposition(i64 k_lo, std::vector<double> m, std::vector<double> t, double margin);

  double boundary(i64 k) const;  // m_k
  double marker(i64 k) const;    // t_k, defined for bands [band_lo, band_hi]
  i64 band_lo() const;
  i64 band_hi() const;
  double margin() const { return cfg_.margin; }

  // Materialize band k; throws Err::NotProper when the greedy search fails.
  void ensure_band(i64 k) const;
  bool try_ensure_band(i64 k) const;

  // Extend until [window.lo, window.hi] plus `slack` whole bands each side
  // are covered.
  void ensure_window(Window w, int slack) const;

  LatticePtr boundaries() const;  // the m_k sequence
  LatticePtr markers() const;     // the t_k sequence

  const MapPtr& map() const { return f_; }

 private:
  struct Extents {
    double lo, hi;
  };
  Extents extents(double level) const;  // of Sigma_level U f(Sigma_level)
  bool extend_forward() const;
  bool extend_backward() const;

  MapPtr f_;  // null for frozen decompositions
  Config cfg_;
  mutable std::mutex mu_;
  mutable std::map<i64, double> m_;  // boundaries
  mutable std::map<i64, double> t_;  // markers
  mutable bool fwd_exhausted_ = false;
  mutable bool bwd_exhausted_ = false;

  friend class SuitedBoundaryView;
  friend class SuitedMarkerView;
};

using SuitedPtr = std::shared_ptr<SuitedDecomposition>;

SuitedPtr build_suited(MapPtr f, i64 t0 = 0, i64 horizon_k = 2,
                       SuitedDecomposition::Config cfg = {});

// Band index k with level(k) <= t < level(k+1), extending the lattice as
// needed; throws when t cannot be covered.
i64 locate_band(const BandLattice& lat, double t);

// Non-throwing variant for dynamics evidence: saturates to k_min()-1 /
// k_max()+1 when t falls outside everything materializable.
i64 locate_band_clamped(const BandLattice& lat, double t);

struct DynamicsReport {
  bool pass = true;
  i64 min_progress = 0;  // worst per-step band-index progress observed
  std::string detail;
};

// A map bundled with suited bands and verified translation dynamics.
// sink = +1 means the map carries band k to band k+1 (sink at +infinity).
struct LoxodromicCertificate {
  MapPtr map;
  LatticePtr bands;
  int sink = +1;
  DynamicsReport dynamics;
};

// Checks band transport at sampled boundary circles and monotone band
// progress of iterated sample points; throws Err::NotLoxodromic with the
// first violated condition.
LoxodromicCertificate certify_loxodromic(MapPtr m, LatticePtr bands, int iterations = 32,
                                         int samples = 8, double tol = 1e-6);

}  // namespace cw
