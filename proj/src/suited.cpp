#include "commwidth/suited.hpp"

#include <cmath>
#include <sstream>

namespace cw {

namespace {

double floor_strict(double x) {
  // largest integer strictly below x
  double f = std::floor(x);
  return (f == x) ? f - 1.0 : f;
}

double ceil_strict(double x) {
  // smallest integer strictly above x
  double c = std::ceil(x);
  return (c == x) ? c + 1.0 : c;
}

}  // namespace

class SuitedBoundaryView final : public BandLattice {
 public:
  explicit SuitedBoundaryView(std::shared_ptr<const SuitedDecomposition> s) : s_(std::move(s)) {}
  double level(i64 k) const override { return s_->boundary(k); }
  bool try_materialize(i64 k) const override {
    return s_->try_ensure_band(k - 1) || s_->try_ensure_band(k);
  }
  i64 k_min() const override { return s_->band_lo(); }
  i64 k_max() const override { return s_->band_hi() + 1; }

 private:
  std::shared_ptr<const SuitedDecomposition> s_;
};

class SuitedMarkerView final : public BandLattice {
 public:
  explicit SuitedMarkerView(std::shared_ptr<const SuitedDecomposition> s) : s_(std::move(s)) {}
  double level(i64 k) const override { return s_->marker(k); }
  bool try_materialize(i64 k) const override { return s_->try_ensure_band(k); }
  i64 k_min() const override { return s_->band_lo(); }
  i64 k_max() const override { return s_->band_hi(); }

 private:
  std::shared_ptr<const SuitedDecomposition> s_;
};

SuitedDecomposition::SuitedDecomposition(MapPtr f, i64 t0, Config cfg)
    : f_(std::move(f)), cfg_(cfg) {
  auto e0 = extents(static_cast<double>(t0));
  double m1 = ceil_strict(e0.hi + cfg_.margin);
  // The seed band is symmetric when the map's displacement allows, matching
  // the round-band seed [-n0, n0].
  double m0 = std::min(-m1, floor_strict(e0.lo - cfg_.margin));
  t_[0] = static_cast<double>(t0);
  m_[0] = m0;
  m_[1] = m1;
}

SuitedDecomposition::SuitedDecomposition(i64 k_lo, std::vector<double> m, std::vector<double> t,
                                         double margin) {
  if (m.size() < 2 || t.size() + 1 != m.size())
    throw Error(Err::InvalidSpec, "suited decomposition needs t markers between m boundaries");
  cfg_.margin = margin;
  for (std::size_t i = 0; i < m.size(); ++i) m_[k_lo + static_cast<i64>(i)] = m[i];
  for (std::size_t i = 0; i < t.size(); ++i) t_[k_lo + static_cast<i64>(i)] = t[i];
  for (auto it = std::next(m_.begin()); it != m_.end(); ++it)
    if (!(it->second > std::prev(it)->second))
      throw Error(Err::InvalidSpec, "suited boundaries must strictly increase");
  fwd_exhausted_ = bwd_exhausted_ = true;
}

SuitedDecomposition::Extents SuitedDecomposition::extents(double level) const {
  GraphCurve img = level_image(*f_, level, cfg_.curve);
  return {std::min(level, img.vmin), std::max(level, img.vmax)};
}

double SuitedDecomposition::boundary(i64 k) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = m_.find(k);
  if (it == m_.end()) throw Error(Err::NotMaterialized, "band boundary not materialized");
  return it->second;
}

double SuitedDecomposition::marker(i64 k) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = t_.find(k);
  if (it == t_.end()) throw Error(Err::NotMaterialized, "marker level not materialized");
  return it->second;
}

i64 SuitedDecomposition::band_lo() const {
  std::lock_guard<std::mutex> lock(mu_);
  return t_.begin()->first;
}

i64 SuitedDecomposition::band_hi() const {
  std::lock_guard<std::mutex> lock(mu_);
  return t_.rbegin()->first;
}

bool SuitedDecomposition::extend_forward() const {
  // Forward step: find the next admissible integer marker above the frontier,
  // then the next boundary above the marker's curve extent.
  std::unique_lock<std::mutex> lock(mu_);
  if (fwd_exhausted_) return false;
  double frontier = m_.rbegin()->second;
  i64 k_new = t_.rbegin()->first + 1;
  lock.unlock();

  // The smallest admissible integer satisfies both cand > frontier + margin
  // and f(cand) > frontier + margin; monotonicity makes admissibility
  // monotone in cand, so start at the analytic threshold and scan the
  // remaining short distance.
  double start = std::max(std::floor(frontier) + 1.0,
                          std::floor(eval_inverse(*f_, {0.0, frontier + cfg_.margin}).t) + 1.0);
  Extents ext{};
  bool found = false;
  for (i64 step = 0; step < cfg_.window_w; ++step) {
    double cand = start + static_cast<double>(step);
    if (!(cand > frontier)) continue;
    // The search budget is measured from the frontier, not from the analytic
    // threshold; a map whose displacement pushes the threshold past the
    // window is out of scope.
    if (cand - frontier > static_cast<double>(cfg_.window_w)) break;
    if (!std::isfinite(cand) || !(std::fabs(cand) < cfg_.level_cap)) break;
    ext = extents(cand);
    if (ext.lo > frontier + cfg_.margin) {
      start = cand;
      found = true;
      break;
    }
  }
  double t_candidate = start;
  lock.lock();
  if (!found) {
    fwd_exhausted_ = true;
    return false;
  }
  double m_new = ceil_strict(ext.hi + cfg_.margin);
  if (!(m_new > m_.rbegin()->second) || !(std::fabs(m_new) < cfg_.level_cap)) {
    fwd_exhausted_ = true;
    return false;
  }
  t_[k_new] = t_candidate;
  m_[k_new + 1] = m_new;
  return true;
}

bool SuitedDecomposition::extend_backward() const {
  std::unique_lock<std::mutex> lock(mu_);
  if (bwd_exhausted_) return false;
  double frontier = m_.begin()->second;
  i64 k_new = t_.begin()->first - 1;
  lock.unlock();

  double start = std::min(std::ceil(frontier) - 1.0,
                          std::ceil(eval_inverse(*f_, {0.0, frontier - cfg_.margin}).t) - 1.0);
  Extents ext{};
  bool found = false;
  for (i64 step = 0; step < cfg_.window_w; ++step) {
    double cand = start - static_cast<double>(step);
    if (!(cand < frontier)) continue;
    if (frontier - cand > static_cast<double>(cfg_.window_w)) break;
    if (!std::isfinite(cand) || !(std::fabs(cand) < cfg_.level_cap)) break;
    ext = extents(cand);
    if (ext.hi < frontier - cfg_.margin) {
      start = cand;
      found = true;
      break;
    }
  }
  double t_candidate = start;
  lock.lock();
  if (!found) {
    bwd_exhausted_ = true;
    return false;
  }
  double m_new = floor_strict(ext.lo - cfg_.margin);
  if (!(m_new < m_.begin()->second) || !(std::fabs(m_new) < cfg_.level_cap)) {
    bwd_exhausted_ = true;
    return false;
  }
  t_[k_new] = t_candidate;
  m_[k_new] = m_new;
  return true;
}

bool SuitedDecomposition::try_ensure_band(i64 k) const {
  for (;;) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (t_.count(k)) return true;
    }
    bool ok = (k > 0) ? extend_forward() : extend_backward();
    if (!ok) return false;
  }
}

void SuitedDecomposition::ensure_band(i64 k) const {
  if (!try_ensure_band(k)) {
    std::ostringstream msg;
    msg << "no admissible integer within the search window while materializing band " << k;
    throw Error(Err::NotProper, msg.str());
  }
}

void SuitedDecomposition::ensure_window(Window w, int slack) const {
  while (boundary(band_hi() + 1) < w.hi) ensure_band(band_hi() + 1);
  while (boundary(band_lo()) > w.lo) ensure_band(band_lo() - 1);
  // Slack bands are numerical headroom, not part of the covering obligation;
  // a lattice saturating at its magnitude cap just provides fewer.
  for (int i = 0; i < slack; ++i) {
    try_ensure_band(band_hi() + 1);
    try_ensure_band(band_lo() - 1);
  }
}

LatticePtr SuitedDecomposition::boundaries() const {
  return std::make_shared<SuitedBoundaryView>(shared_from_this());
}

LatticePtr SuitedDecomposition::markers() const {
  return std::make_shared<SuitedMarkerView>(shared_from_this());
}

SuitedPtr build_suited(MapPtr f, i64 t0, i64 horizon_k, SuitedDecomposition::Config cfg) {
  auto s = std::make_shared<SuitedDecomposition>(std::move(f), t0, cfg);
  for (i64 k = 1; k <= horizon_k; ++k) {
    s->ensure_band(k);
    s->ensure_band(-k);
  }
  return s;
}

i64 locate_band(const BandLattice& lat, double t) {
  if (!std::isfinite(t)) throw Error(Err::NonFinite, "band lookup of a non-finite level");
  while (t < lat.level(lat.k_min()))
    if (!lat.try_materialize(lat.k_min() - 1))
      throw Error(Err::NotMaterialized, "level below every materializable band");
  while (t >= lat.level(lat.k_max()))
    if (!lat.try_materialize(lat.k_max() + 1))
      throw Error(Err::NotMaterialized, "level above every materializable band");
  i64 lo = lat.k_min(), hi = lat.k_max();
  while (hi - lo > 1) {
    i64 mid = lo + (hi - lo) / 2;
    if (lat.level(mid) <= t)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

i64 locate_band_clamped(const BandLattice& lat, double t) {
  try {
    return locate_band(lat, t);
  } catch (const Error& e) {
    if (e.code() != Err::NotMaterialized) throw;
    return (t < lat.level(lat.k_min())) ? lat.k_min() - 1 : lat.k_max();
  }
}

LoxodromicCertificate certify_loxodromic(MapPtr m, LatticePtr bands, int iterations, int samples,
                                         double tol) {
  LoxodromicCertificate cert;
  cert.map = m;
  cert.bands = bands;

  const int theta_n = (m->fiber() == Fiber::Circle) ? 16 : 1;

  // Determine the transport direction from the k = 0 boundary.
  double b0 = bands->level(0);
  bands->try_materialize(-1);
  bands->try_materialize(2);
  double img0 = eval(*m, {0.0, b0}).t;
  int sink = 0;
  if (std::fabs(img0 - bands->level(1)) < tol)
    sink = +1;
  else if (bands->k_min() <= -1 && std::fabs(img0 - bands->level(-1)) < tol)
    sink = -1;
  else
    throw Error(Err::NotLoxodromic, "boundary circle is not carried to an adjacent boundary");
  cert.sink = sink;

  // Condition (iii): map(fiber x {m_k}) = fiber x {m_{k+sink}} at every
  // materialized boundary, sampled around the fiber.
  // Snapshot the frontier: evaluating the map near it materializes new bands.
  const i64 kmin = bands->k_min(), kmax = bands->k_max();
  for (i64 k = kmin; k <= kmax; ++k) {
    if (k + sink < kmin || k + sink > kmax) continue;
    double src = bands->level(k);
    double dst = bands->level(k + sink);
    for (int i = 0; i < theta_n; ++i) {
      double theta = static_cast<double>(i) / theta_n;
      double lvl = eval(*m, {theta, src}).t;
      if (std::fabs(lvl - dst) > tol) {
        std::ostringstream msg;
        msg << "band transport fails at boundary k=" << k << ": |" << lvl << " - " << dst
            << "| > " << tol;
        throw Error(Err::NotLoxodromic, msg.str());
      }
    }
  }

  // Condition (iv) evidence: iterates of sample points cross bands
  // monotonically toward the sink, and away from it under the inverse.
  double lo = bands->level(bands->k_min());
  double hi = bands->level(bands->k_max());
  i64 worst = iterations;
  for (int dir = 0; dir < 2; ++dir) {
    for (int i = 0; i < samples; ++i) {
      double frac = (samples == 1) ? 0.5 : static_cast<double>(i) / (samples - 1);
      Pt p{wrap_turn(0.37 * i), lo + 0.25 * (hi - lo) + 0.5 * frac * (hi - lo)};
      i64 prev = locate_band_clamped(*bands, p.t);
      for (int n = 0; n < iterations; ++n) {
        double before = p.t;
        p = (dir == 0) ? eval(*m, p) : eval_inverse(*m, p);
        i64 cur = locate_band_clamped(*bands, p.t);
        i64 progress = (dir == 0) ? sink * (cur - prev) : sink * (prev - cur);
        bool saturated = cur < bands->k_min() || cur >= bands->k_max();
        bool level_ok = (dir == 0) == (sink > 0) ? (p.t > before) : (p.t < before);
        // Orbits attracted to the boundary circles shadow them within
        // roundoff, which makes the band index of a single step ambiguous
        // even though the exact boundary transport (checked above) forces
        // the true orbit to progress.  Such steps are exempt from the
        // per-step index requirement.
        bool hugging = false;
        if (!saturated && progress < 1) {
          double width = bands->level(cur + 1) - bands->level(cur);
          double slack = tol * std::max(1.0, width);
          hugging = (p.t - bands->level(cur) <= slack) || (bands->level(cur + 1) - p.t <= slack);
        }
        if ((!saturated && progress < 1 && !hugging) || !level_ok)
          throw Error(Err::NotLoxodromic,
                      "iterated sample point does not progress monotonically toward the sink");
        if (!saturated && !hugging) worst = std::min(worst, progress);
        prev = cur;
        if (saturated) break;
      }
    }
  }
  cert.dynamics.pass = true;
  cert.dynamics.min_progress = worst;
  return cert;
}

}  // namespace cw
